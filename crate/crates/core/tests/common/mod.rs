//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use poi_conflate::conflation::{conflate, ConflationConfig, ConflationError, ConflationOutput, OsmIndex};
use poi_conflate::geo::{haversine_m, GeoPoint};
use poi_conflate::graph::{GraphEdge, GraphNode};
use poi_conflate::ingest::{PoiReader, PoiRecord, SourceFilter, SourceSchema};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

/// Reads both sources from CSV text without writing a rejects sidecar.
pub fn load_sources(fsq_csv: &str, osm_csv: &str) -> (Vec<PoiRecord>, Vec<PoiRecord>) {
    let fsq = PoiReader::new(fsq_csv.as_bytes(), &SourceSchema::foursquare(), None, None, "fsq")
        .unwrap()
        .collect::<Result<Vec<_>, _>>()
        .unwrap();
    let osm = PoiReader::new(
        osm_csv.as_bytes(),
        &SourceSchema::openstreetmap(),
        Some(SourceFilter::openstreetmap()),
        None,
        "osm",
    )
    .unwrap()
    .collect::<Result<Vec<_>, _>>()
    .unwrap();
    (fsq, osm)
}

pub fn bundled_sources() -> (Vec<PoiRecord>, Vec<PoiRecord>) {
    let dir = data_dir().join("fixture");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    load_sources(&read("fsq.csv"), &read("osm.csv"))
}

pub fn run_conflation(fsq: &[PoiRecord], osm: &[PoiRecord], cfg: &ConflationConfig) -> ConflationOutput {
    let index = OsmIndex::build(osm.to_vec(), cfg.radius_m).unwrap();
    conflate::<_, ConflationError>(fsq.iter().cloned().map(Ok), &index, cfg).unwrap()
}

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

/// Great-circle distance via the atan2 (Vincenty, spherical) form.
pub fn great_circle_oracle(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
    let dl = (b.lon() - a.lon()).to_radians();
    let y = ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
    let x = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    6_371_000.0 * y.atan2(x)
}

fn oracle_normalize(s: &str) -> Vec<char> {
    let lowered = s.to_lowercase();
    let words: Vec<&str> = lowered.split_whitespace().collect();
    words.join(" ").chars().collect()
}

/// Plain recursive edit distance, no memoization. Only for short strings.
pub fn naive_levenshtein(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((ha, ta)), Some((hb, tb))) => {
            if ha == hb {
                naive_levenshtein(ta, tb)
            } else {
                1 + naive_levenshtein(ta, b)
                    .min(naive_levenshtein(a, tb))
                    .min(naive_levenshtein(ta, tb))
            }
        }
    }
}

pub fn naive_levenshtein_str(a: &str, b: &str) -> usize {
    naive_levenshtein(&oracle_normalize(a), &oracle_normalize(b))
}

/// Enumerates padded trigrams character by character.
pub fn trigram_set_oracle(s: &str) -> HashSet<String> {
    let chars = oracle_normalize(s);
    let mut set = HashSet::new();
    let mut word = String::new();
    let mut flush = |word: &mut String| {
        if !word.is_empty() {
            let padded = format!("  {word} ");
            let cs: Vec<char> = padded.chars().collect();
            for i in 0..cs.len() - 2 {
                set.insert(cs[i..i + 3].iter().collect::<String>());
            }
            word.clear();
        }
    };
    for c in chars {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            flush(&mut word);
        }
    }
    flush(&mut word);
    set
}

pub fn trigram_similarity_oracle(a: &str, b: &str) -> f64 {
    let (ta, tb) = (trigram_set_oracle(a), trigram_set_oracle(b));
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    inter as f64 / union as f64
}

/// O(n) radius scan, sorted by (distance, ordinal).
pub fn brute_radius(points: &[(usize, GeoPoint)], center: GeoPoint, radius_m: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = points
        .iter()
        .map(|&(o, p)| (o, haversine_m(center, p)))
        .filter(|&(_, d)| d <= radius_m)
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

/// O(n log n) kNN by full sort.
pub fn brute_knn(
    points: &[(usize, GeoPoint)],
    center: GeoPoint,
    k: usize,
    exclude: Option<usize>,
) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .filter(|(o, _)| Some(*o) != exclude)
        .map(|&(o, p)| (o, haversine_m(center, p)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// All-pairs kNN graph keyed by source id, destinations in (distance, id) order.
pub fn brute_knn_graph(nodes: &[GraphNode], k: usize) -> BTreeMap<String, Vec<(String, f64)>> {
    let mut out = BTreeMap::new();
    for a in nodes {
        let mut others: Vec<(String, f64)> = nodes
            .iter()
            .filter(|b| b.fsq_place_id != a.fsq_place_id)
            .map(|b| (b.fsq_place_id.clone(), haversine_m(a.point, b.point)))
            .collect();
        others.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        others.truncate(k);
        out.insert(a.fsq_place_id.clone(), others);
    }
    out
}

pub fn group_edges(edges: &[GraphEdge]) -> BTreeMap<String, Vec<(String, f64)>> {
    let mut out: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for e in edges {
        out.entry(e.source.clone())
            .or_default()
            .push((e.destination.clone(), e.distance_m));
    }
    out
}
