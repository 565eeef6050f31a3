//! Directed k-nearest-neighbor proximity graph over matched POIs.
//!
//! Nodes are identified by `fsq_place_id`: several matched rows that share a
//! Foursquare id collapse into one node placed at the Foursquare coordinate.
//! Each node gets edges to its `min(k, n - 1)` nearest other nodes by
//! great-circle distance. No connectivity repair is done, so isolated
//! clusters stay isolated.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conflation::MatchedPoi;
use crate::geo::GeoPoint;
use crate::index::{GridIndex, NeighborIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("fsq_place_id values with conflicting coordinates: {}", .0.join(", "))]
    ConflictingCoordinates(Vec<String>),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("k must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub fsq_place_id: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    pub source: String,
    pub destination: String,
    pub distance_m: f64,
}

/// One node per distinct `fsq_place_id`, in order of first occurrence.
pub fn dedupe_nodes(matches: &[MatchedPoi]) -> Result<Vec<GraphNode>, GraphError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut conflicts: Vec<String> = Vec::new();
    for m in matches {
        match seen.get(m.fsq.id.as_str()) {
            Some(&i) => {
                if nodes[i].point != m.fsq.point && !conflicts.contains(&m.fsq.id) {
                    conflicts.push(m.fsq.id.clone());
                }
            }
            None => {
                seen.insert(&m.fsq.id, nodes.len());
                nodes.push(GraphNode {
                    fsq_place_id: m.fsq.id.clone(),
                    point: m.fsq.point,
                });
            }
        }
    }
    if conflicts.is_empty() {
        Ok(nodes)
    } else {
        conflicts.sort();
        Err(GraphError::ConflictingCoordinates(conflicts))
    }
}

// Cell edge (degrees) giving roughly `k` nodes per occupied cell for a
// uniform spread over the nodes' bounding box.
fn cell_size_for(nodes: &[GraphNode], k: usize) -> f64 {
    let (mut lat0, mut lat1, mut lon0, mut lon1) = (90.0f64, -90.0f64, 180.0f64, -180.0f64);
    for n in nodes {
        lat0 = lat0.min(n.point.lat());
        lat1 = lat1.max(n.point.lat());
        lon0 = lon0.min(n.point.lon());
        lon1 = lon1.max(n.point.lon());
    }
    let area = ((lat1 - lat0).max(1e-4)) * ((lon1 - lon0).max(1e-4));
    (area * k as f64 / nodes.len().max(1) as f64).sqrt().clamp(1e-4, 10.0)
}

/// Edges from every node to its `min(k, n - 1)` nearest neighbors, sorted by
/// (source, distance, destination). Equal distances resolve to the smaller
/// destination id.
pub fn build_knn_graph(nodes: &[GraphNode], k: usize) -> Result<Vec<GraphEdge>, GraphError> {
    if k == 0 {
        return Err(GraphError::ZeroK);
    }
    let mut order: Vec<&GraphNode> = nodes.iter().collect();
    order.sort_by(|a, b| a.fsq_place_id.cmp(&b.fsq_place_id));
    if let Some(w) = order.windows(2).find(|w| w[0].fsq_place_id == w[1].fsq_place_id) {
        return Err(GraphError::DuplicateNode(w[0].fsq_place_id.clone()));
    }
    if order.len() < 2 {
        return Ok(Vec::new());
    }

    // Ordinals follow id order, so the index's ordinal tie-break is an id tie-break.
    let index = GridIndex::with_cell_deg(
        order.iter().enumerate().map(|(i, n)| (i, n.point)),
        cell_size_for(nodes, k),
    )
    .expect("cell size is positive and finite");

    let edges: Vec<Vec<GraphEdge>> = order
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            index
                .knn_query(node.point, k, Some(i))
                .into_iter()
                .map(|(j, d)| GraphEdge {
                    source: node.fsq_place_id.clone(),
                    destination: order[j].fsq_place_id.clone(),
                    distance_m: d,
                })
                .collect()
        })
        .collect();
    Ok(edges.into_iter().flatten().collect())
}
