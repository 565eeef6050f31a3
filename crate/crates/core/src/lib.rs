//! Conflation of two point-of-interest sources.
//!
//! A Foursquare-style table and an OpenStreetMap-style table are joined by
//! great-circle radius, each candidate pair is scored by trigram and
//! normalized Levenshtein name similarity, low-confidence pairs are dropped,
//! and the survivors are numbered and exported as a flat CSV. The matched
//! set can then be turned into a directed k-nearest-neighbor proximity graph.
//!
//! Module map:
//!
//! * [`geo`]: points, WKT, centroids, degree and great-circle distances
//! * [`similarity`]: name normalization, trigram and Levenshtein scores
//! * [`index`]: exact grid index for radius and kNN queries
//! * [`ingest`]: CSV readers and writers
//! * [`conflation`]: join, score, filter, `poi_id` assignment
//! * [`graph`]: kNN proximity graph
//! * [`cli`]: the `poi-conflate` command line
//! * [`fixture`]: seeded synthetic inputs with planted ground truth

pub mod cli;
pub mod conflation;
pub mod fixture;
pub mod geo;
pub mod graph;
pub mod index;
pub mod ingest;
pub mod similarity;

pub use conflation::{conflate, ConflationConfig, MatchCandidate, MatchedPoi, OsmIndex};
pub use geo::{degree_distance, haversine_m, GeoPoint, Geometry};
pub use graph::{build_knn_graph, dedupe_nodes, GraphEdge, GraphNode};
pub use index::{build_index, GridIndex, NeighborIndex};
pub use ingest::{PoiRecord, SourceFilter, SourceSchema};
pub use similarity::{levenshtein_similarity, trigram_similarity, SimilarityScore};
