//! One Foursquare place matched to two OSM records: two tabular rows with
//! distinct `poi_id`s, one graph node.
//!
//!     cargo run --example duplicate_matches

use poi_conflate::conflation::{conflate, ConflationConfig, OsmIndex};
use poi_conflate::fixture::duplicate_fixture;
use poi_conflate::graph::{build_knn_graph, dedupe_nodes};
use poi_conflate::ingest::{PoiReader, SourceFilter, SourceSchema};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = duplicate_fixture();
    let cfg = ConflationConfig::default();

    let osm: Vec<_> = PoiReader::new(
        fixture.osm_csv.as_bytes(),
        &SourceSchema::openstreetmap(),
        Some(SourceFilter::openstreetmap()),
        None,
        "osm",
    )?
    .collect::<Result<_, _>>()?;
    let osm = OsmIndex::build(osm, cfg.radius_m)?;
    let fsq = PoiReader::new(
        fixture.fsq_csv.as_bytes(),
        &SourceSchema::foursquare(),
        None,
        None,
        "fsq",
    )?;
    let out = conflate::<_, Box<dyn std::error::Error>>(fsq.map(|r| r.map_err(Into::into)), &osm, &cfg)?;

    println!("poi_id  fsq_place_id              fsq_name   osm_id      osm_name        lev");
    for m in &out.matches {
        println!(
            "{:<7} {:<25} {:<10} {:<11} {:<15} {:.3}",
            m.poi_id,
            m.fsq.id,
            m.fsq.name,
            m.osm.id,
            m.osm.name,
            m.sim_lev.value()
        );
    }

    let nodes = dedupe_nodes(&out.matches)?;
    let edges = build_knn_graph(&nodes, cfg.k)?;
    println!(
        "\n{} rows, {} graph nodes, {} edges",
        out.matches.len(),
        nodes.len(),
        edges.len()
    );
    Ok(())
}
