//! Degree distance, great-circle distance, and OSM geometry centroids.
//!
//!     cargo run --example distances

use poi_conflate::geo::{centroid, degree_distance, haversine_m, parse_wkt, point_ewkb_hex, GeoPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fsq = GeoPoint::new(33.768107, -84.34941113)?;
    let osm = GeoPoint::new(33.7680684, -84.3494503)?;
    println!("fsq_osm_distance  {:.6e} deg", degree_distance(fsq, osm));
    println!("great circle      {:.3} m", haversine_m(fsq, osm));
    println!("geom              {}", point_ewkb_hex(fsq));

    let equator = haversine_m(GeoPoint::new(0.0, 0.0)?, GeoPoint::new(0.0, 1.0)?);
    println!("1 deg of equator  {equator:.4} m");

    // The same 0.001 degree step shrinks in meters as latitude grows.
    for lat in [0.0, 45.0, 64.18, 70.0] {
        let a = GeoPoint::new(lat, -51.0)?;
        let b = GeoPoint::new(lat, -50.999)?;
        println!("lat {lat:>5}: 0.001 deg east = {:>7.2} m", haversine_m(a, b));
    }

    println!();
    for wkt in [
        "POINT(-51.6942 64.1815)",
        "LINESTRING(-84.4404837 33.7003697, -84.4404037 33.7003697)",
        "POLYGON((-51.69405 64.18125, -51.69385 64.18125, -51.69385 64.18135, -51.69405 64.18135, -51.69405 64.18125))",
        "MULTIPOINT((0 0), (1 1))",
    ] {
        match parse_wkt(wkt) {
            Ok(g) => {
                let c = centroid(&g);
                println!("{:<10} -> ({}, {})", wkt.split('(').next().unwrap(), c.lat(), c.lon());
            }
            Err(e) => println!("{:<10} -> rejected: {e}", wkt.split('(').next().unwrap()),
        }
    }
    Ok(())
}
