//! Writes the synthetic two-source fixture (and its planted truth) to a
//! directory, plus the small duplicate-match fixture under `duplicates/`.
//!
//!     cargo run --example make_fixture -- <dir> [seed]

use std::fs;
use std::path::PathBuf;

use poi_conflate::fixture::{duplicate_fixture, synthetic, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let seed = args
        .next()
        .map_or(FIXTURE_SEED, |s| s.parse().expect("seed must be an integer"));
    fs::create_dir_all(&dir)?;

    let fixture = synthetic(seed);
    let (fsq, osm) = fixture.write_to(&dir)?;
    let mut truth = String::from("fsq_place_id,osm_id,kind,distance_m\n");
    for p in &fixture.planted {
        truth.push_str(&format!("{},{},{:?},{:.2}\n", p.fsq_id, p.osm_id, p.kind, p.distance_m));
    }
    fs::write(dir.join("planted.csv"), truth)?;
    let dup_dir = dir.join("duplicates");
    fs::create_dir_all(&dup_dir)?;
    duplicate_fixture().write_to(&dup_dir)?;

    println!("{} ({} rows)", fsq.display(), fixture.fsq_count);
    println!("{} ({} rows)", osm.display(), fixture.osm_rows);
    println!(
        "{} planted pairs, {} true",
        fixture.planted.len(),
        fixture.true_pairs().count()
    );
    Ok(())
}
