//! Builds the k-nearest-neighbor graph from a matched table and writes the
//! edge list to stdout.
//!
//!     cargo run --example knn_graph -- matches.csv [k]

use poi_conflate::graph::{build_knn_graph, dedupe_nodes};
use poi_conflate::ingest::{read_matches_csv, write_edges};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: knn_graph <matches.csv> [k]");
        std::process::exit(2);
    };
    let k: usize = args.next().map_or(Ok(10), |s| s.parse())?;

    let matches = read_matches_csv(path.as_ref())?;
    let nodes = dedupe_nodes(&matches)?;
    let edges = build_knn_graph(&nodes, k)?;
    eprintln!(
        "{} rows, {} nodes, {} edges (k = {k})",
        matches.len(),
        nodes.len(),
        edges.len()
    );
    write_edges(std::io::stdout().lock(), &edges)?;
    Ok(())
}
