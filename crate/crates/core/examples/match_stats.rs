//! Similarity histograms and distance percentiles for a matched table.
//!
//!     cargo run --example match_stats -- matches.csv

use poi_conflate::cli::StatsReport;
use poi_conflate::ingest::read_matches_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: match_stats <matches.csv>");
        std::process::exit(2);
    };
    let matches = read_matches_csv(path.as_ref())?;
    let report = StatsReport::compute(&matches);
    print!("{report}");

    let mismatched: Vec<_> = matches
        .iter()
        .filter(|m| m.sim_trg.value() < 0.5 && m.sim_lev.value() >= 0.5)
        .collect();
    println!("rows kept by Levenshtein with trigram < 0.5: {}", mismatched.len());
    for m in mismatched.iter().take(5) {
        println!("  {} / {}", m.fsq.name, m.osm.name);
    }
    Ok(())
}
