//! The conflation stages one at a time on the synthetic fixture: spatial
//! join, scoring, threshold filter, `poi_id` assignment.
//!
//!     cargo run --example conflate_pipeline [threshold]

use std::sync::Arc;

use poi_conflate::conflation::{
    assign_poi_ids, filter_matches, score_candidates, spatial_join, ConflationConfig, OsmIndex,
};
use poi_conflate::fixture::{synthetic, FIXTURE_SEED};
use poi_conflate::ingest::{PoiReader, SourceFilter, SourceSchema};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let threshold = std::env::args().nth(1).map_or(Ok(0.5), |s| s.parse())?;
    let cfg = ConflationConfig {
        threshold,
        ..Default::default()
    };
    cfg.validate()?;

    let fx = synthetic(FIXTURE_SEED);
    let fsq: Vec<_> = PoiReader::new(fx.fsq_csv.as_bytes(), &SourceSchema::foursquare(), None, None, "fsq")?
        .map(|r| r.map(Arc::new))
        .collect::<Result<_, _>>()?;
    let osm: Vec<_> = PoiReader::new(
        fx.osm_csv.as_bytes(),
        &SourceSchema::openstreetmap(),
        Some(SourceFilter::openstreetmap()),
        None,
        "osm",
    )?
    .collect::<Result<_, _>>()?;
    println!("fsq {} records, osm {} records", fsq.len(), osm.len());

    let osm = OsmIndex::build(osm, cfg.radius_m)?;
    let candidates: Vec<_> = spatial_join(fsq, &osm, &cfg)?.collect();
    println!("joined within {} m: {} candidates", cfg.radius_m, candidates.len());

    let scored: Vec<_> = score_candidates(candidates, cfg.levenshtein_normalization).collect();
    let kept = filter_matches(scored.clone(), &cfg).collect::<Result<Vec<_>, _>>()?;
    println!(
        "lev >= {}: kept {}, dropped {}",
        cfg.threshold,
        kept.len(),
        scored.len() - kept.len()
    );

    let matches = assign_poi_ids(kept)?;
    println!("\npoi_id  fsq_name                    osm_name                     trg    lev  dist_m");
    for m in matches.iter().take(10) {
        println!(
            "{:<7} {:<27} {:<27} {:>5.2} {:>6.2} {:>6.1}",
            m.poi_id,
            m.fsq.name,
            m.osm.name,
            m.sim_trg.value(),
            m.sim_lev.value(),
            m.distance_m
        );
    }

    let dropped = scored
        .iter()
        .filter(|c| c.sim_lev.is_some_and(|s| s.value() < cfg.threshold))
        .take(3);
    println!("\nsome rejected pairs:");
    for c in dropped {
        println!(
            "  {:<27} {:<27} lev {:.2}",
            c.fsq.name,
            c.osm.name,
            c.sim_lev.unwrap().value()
        );
    }
    Ok(())
}
