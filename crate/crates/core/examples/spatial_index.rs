//! Radius and k-nearest queries on the grid index.
//!
//!     cargo run --example spatial_index

use poi_conflate::geo::GeoPoint;
use poi_conflate::index::{build_index, NeighborIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let places = [
        ("Brugseni", 64.1814, -51.6941),
        ("Brugseni annex", 64.1816, -51.6938),
        ("Cafe Inuk", 64.1846, -51.7222),
        ("Hotel Hans Egede", 64.1755, -51.7381),
        ("Pisiffik", 64.1702, -51.7105),
        ("Katuaq", 64.1769, -51.7344),
    ];
    let points = places
        .iter()
        .enumerate()
        .map(|(i, &(_, lat, lon))| Ok((i, GeoPoint::new(lat, lon)?)))
        .collect::<Result<Vec<_>, poi_conflate::geo::GeoError>>()?;
    let index = build_index(points, 50.0)?;
    println!(
        "{} points in {} cells of {:.6} deg",
        index.len(),
        index.bucket_count(),
        index.cell_deg()
    );

    let here = GeoPoint::new(64.1815, -51.6940)?;
    println!("\nwithin 50 m of ({}, {}):", here.lat(), here.lon());
    for (i, d) in index.radius_query(here, 50.0)? {
        println!("  {:<16} {d:>7.2} m", places[i].0);
    }

    println!("\n3 nearest to {}:", places[2].0);
    for (i, d) in index.knn_query(GeoPoint::new(places[2].1, places[2].2)?, 3, Some(2)) {
        println!("  {:<16} {d:>7.1} m", places[i].0);
    }

    // Queries wider than the build radius are refused.
    if let Err(e) = index.radius_query(here, 500.0) {
        println!("\n500 m query: {e}");
    }
    Ok(())
}
