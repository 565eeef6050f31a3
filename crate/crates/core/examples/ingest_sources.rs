//! Streams a source CSV and reports what was kept, skipped and rejected.
//!
//!     cargo run --example ingest_sources -- osm path/to/osm.csv
//!     cargo run --example ingest_sources -- fsq path/to/fsq.csv
//!
//! Rejected rows are written to `<input>.rejects.csv`.

use std::path::PathBuf;

use poi_conflate::ingest::{read_poi_csv, rejects_path, SourceFilter, SourceSchema};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(kind), Some(path)) = (args.next(), args.next()) else {
        eprintln!("usage: ingest_sources <fsq|osm> <file.csv>");
        std::process::exit(2);
    };
    let path = PathBuf::from(path);
    let (schema, filter) = match kind.as_str() {
        "fsq" => (SourceSchema::foursquare(), None),
        "osm" => (SourceSchema::openstreetmap(), Some(SourceFilter::openstreetmap())),
        other => return Err(format!("unknown source `{other}`").into()),
    };

    let mut reader = read_poi_csv(&path, &schema, filter)?;
    let mut shown = 0;
    for rec in reader.by_ref() {
        let rec = rec?;
        if shown < 5 {
            println!(
                "{:<26} {:<30} ({:.6}, {:.6})",
                rec.id,
                rec.name,
                rec.point.lat(),
                rec.point.lon()
            );
            shown += 1;
        }
    }

    let s = reader.stats();
    println!("\nrows in        {}", s.rows_in);
    println!("yielded        {}", s.rows_yielded);
    println!(
        "skipped        {} (no name {}, excluded class {})",
        s.rows_skipped, s.skipped_missing_name, s.skipped_excluded_class
    );
    println!("rejected       {}", s.rows_rejected);
    if s.rows_rejected > 0 {
        println!("rejects file   {}", rejects_path(&path).display());
    }
    Ok(())
}
