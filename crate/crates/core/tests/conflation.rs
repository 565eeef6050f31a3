mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{bundled_sources, load_sources, run_conflation};
use poi_conflate::conflation::{
    filter_matches, score_candidates, spatial_join, Comparator, ConflationConfig, FilterMetric, JoinMode, OsmIndex,
};
use poi_conflate::fixture::{synthetic, PairKind, FIXTURE_SEED};
use poi_conflate::geo::{degree_distance, haversine_m, GeoPoint};
use poi_conflate::ingest::{Attributes, PoiRecord};
use poi_conflate::similarity::{levenshtein_similarity, trigram_similarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rec(id: &str, name: &str, lat: f64, lon: f64) -> PoiRecord {
    PoiRecord {
        id: id.into(),
        name: name.into(),
        point: GeoPoint::new(lat, lon).unwrap(),
        attributes: Attributes::empty(),
    }
}

fn pairs(out: &poi_conflate::conflation::ConflationOutput) -> BTreeSet<(String, String)> {
    out.matches
        .iter()
        .map(|m| (m.fsq.id.clone(), m.osm.id.clone()))
        .collect()
}

#[test]
fn bundled_fixture_is_reproducible() {
    let fx = synthetic(FIXTURE_SEED);
    let dir = common::data_dir().join("fixture");
    assert_eq!(std::fs::read_to_string(dir.join("fsq.csv")).unwrap(), fx.fsq_csv);
    assert_eq!(std::fs::read_to_string(dir.join("osm.csv")).unwrap(), fx.osm_csv);
    assert_eq!(fx.planted.iter().filter(|p| p.kind == PairKind::True).count(), 80);
    assert_eq!(fx.planted.iter().filter(|p| p.kind == PairKind::NearMiss).count(), 40);
    assert_eq!(
        fx.planted.iter().filter(|p| p.kind == PairKind::NameMismatch).count(),
        40
    );
}

#[test]
fn planted_offsets_10_30_70() {
    // Same name at three offsets due north; only the first two are within 50 m.
    let m_per_deg = haversine_m(GeoPoint::new(0.0, 0.0).unwrap(), GeoPoint::new(1.0, 0.0).unwrap());
    let fsq: Vec<_> = (0..3)
        .map(|i| rec(&format!("f{i}"), "Corner Deli", 40.0 + i as f64, -75.0))
        .collect();
    let osm: Vec<_> = [10.0, 30.0, 70.0]
        .iter()
        .enumerate()
        .map(|(i, m)| rec(&format!("o{i}"), "Corner Deli", 40.0 + i as f64 + m / m_per_deg, -75.0))
        .collect();
    let out = run_conflation(&fsq, &osm, &ConflationConfig::default());
    let got: Vec<_> = out
        .matches
        .iter()
        .map(|m| (m.fsq.id.as_str(), m.osm.id.as_str()))
        .collect();
    assert_eq!(got, vec![("f0", "o0"), ("f1", "o1")]);
    assert!((out.matches[0].distance_m - 10.0).abs() < 1e-6);
    assert!((out.matches[1].distance_m - 30.0).abs() < 1e-6);
    assert_eq!(out.counts.candidates, 2);
}

fn random_sources(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (Vec<PoiRecord>, Vec<PoiRecord>) {
    let names = [
        "Cafe",
        "Cafe Blue",
        "Blue Cafe",
        "Deli",
        "Corner Deli",
        "Books",
        "Bookshop",
    ];
    let draw = |prefix: &str, i: usize, rng: &mut ChaCha8Rng| {
        let name = names[rng.random_range(0..names.len())];
        rec(
            &format!("{prefix}{i:04}"),
            name,
            rng.random_range(51.5..51.503),
            rng.random_range(-0.13..-0.125),
        )
    };
    let fsq = (0..n).map(|i| draw("f", i, rng)).collect();
    let osm = (0..m).map(|i| draw("o", i, rng)).collect();
    (fsq, osm)
}

#[test]
fn join_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, m) in [(50, 80), (300, 200), (500, 500)] {
        let (fsq, osm) = random_sources(&mut rng, n, m);
        let cfg = ConflationConfig::default();
        let index = OsmIndex::build(osm.clone(), cfg.radius_m).unwrap();
        let joined: Vec<_> = spatial_join(fsq.iter().cloned().map(Arc::new), &index, &cfg)
            .unwrap()
            .collect();
        let got: Vec<(String, String)> = joined.iter().map(|c| (c.fsq.id.clone(), c.osm.id.clone())).collect();

        let mut expected = Vec::new();
        for f in &fsq {
            let mut hits: Vec<_> = osm
                .iter()
                .enumerate()
                .map(|(i, o)| (i, haversine_m(f.point, o.point)))
                .filter(|&(_, d)| d <= 50.0)
                .collect();
            hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            expected.extend(hits.into_iter().map(|(i, _)| (f.id.clone(), osm[i].id.clone())));
        }
        assert_eq!(got, expected, "n={n} m={m}");
        assert!(!got.is_empty());

        for c in &joined {
            assert_eq!(c.distance_deg, degree_distance(c.fsq.point, c.osm.point));
            assert!(c.sim_lev.is_none() && c.sim_trg.is_none());
        }
        for c in score_candidates(joined, cfg.levenshtein_normalization) {
            assert_eq!(c.sim_trg.unwrap(), trigram_similarity(&c.fsq.name, &c.osm.name));
            assert_eq!(c.sim_lev.unwrap(), levenshtein_similarity(&c.fsq.name, &c.osm.name));
        }
    }
}

#[test]
fn nearest_only_keeps_one_per_fsq() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (fsq, osm) = random_sources(&mut rng, 300, 300);
    let all = ConflationConfig {
        threshold: 0.0,
        ..Default::default()
    };
    let nearest = ConflationConfig {
        join_mode: JoinMode::NearestOnly,
        ..all.clone()
    };
    let a = run_conflation(&fsq, &osm, &all);
    let b = run_conflation(&fsq, &osm, &nearest);

    let ids: Vec<_> = b.matches.iter().map(|m| m.fsq.id.as_str()).collect();
    let distinct: BTreeSet<_> = ids.iter().collect();
    assert_eq!(ids.len(), distinct.len());
    assert!(a.matches.iter().map(|m| &m.fsq.id).collect::<BTreeSet<_>>().len() == distinct.len());
    assert!(pairs(&b).is_subset(&pairs(&a)));
    // Each kept OSM record is the closest one available.
    for m in &b.matches {
        let best = a
            .matches
            .iter()
            .filter(|x| x.fsq.id == m.fsq.id)
            .map(|x| x.distance_m)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(m.distance_m, best);
    }
}

#[test]
fn thresholds_are_monotone_for_every_metric() {
    let (fsq, osm) = bundled_sources();
    for metric in [
        FilterMetric::Levenshtein,
        FilterMetric::Trigram,
        FilterMetric::Both,
        FilterMetric::Either,
    ] {
        for cmp in [Comparator::AtLeast, Comparator::GreaterThan] {
            let mut prev: Option<BTreeSet<(String, String)>> = None;
            for t in [0.0, 0.3, 0.5, 0.7, 0.9, 1.0] {
                let cfg = ConflationConfig {
                    filter_metric: metric,
                    comparator: cmp,
                    threshold: t,
                    ..Default::default()
                };
                let kept = pairs(&run_conflation(&fsq, &osm, &cfg));
                if let Some(p) = &prev {
                    assert!(kept.is_subset(p), "{metric:?} {cmp:?} at {t}");
                }
                prev = Some(kept);
            }
        }
    }
    let cfg = ConflationConfig {
        threshold: 1.0,
        comparator: Comparator::GreaterThan,
        ..Default::default()
    };
    assert!(run_conflation(&fsq, &osm, &cfg).matches.is_empty());
}

#[test]
fn poi_ids_are_a_bijection_onto_one_to_n() {
    let (fsq, osm) = bundled_sources();
    let cfg = ConflationConfig {
        threshold: 0.0,
        ..Default::default()
    };
    let out = run_conflation(&fsq, &osm, &cfg);
    let n = out.matches.len() as u64;
    assert_eq!(out.counts.matched, n);
    assert_eq!(out.counts.candidates, out.counts.matched + out.counts.filtered_out);
    let ids: Vec<u64> = out.matches.iter().map(|m| m.poi_id).collect();
    assert_eq!(ids, (1..=n).collect::<Vec<_>>());
    let keys: Vec<_> = out.matches.iter().map(|m| (&m.fsq.id, &m.osm.id)).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn output_independent_of_thread_count() {
    let (fsq, osm) = bundled_sources();
    let cfg = ConflationConfig::default();
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_conflation(&fsq, &osm, &cfg)).matches
    };
    let one = run_with(1);
    assert_eq!(one, run_with(8));
    assert_eq!(one, run_with(3));
}

#[test]
fn filter_matches_agrees_with_pipeline() {
    let fx = synthetic(7);
    let (fsq, osm) = load_sources(&fx.fsq_csv, &fx.osm_csv);
    let cfg = ConflationConfig::default();
    let index = OsmIndex::build(osm.clone(), cfg.radius_m).unwrap();
    let joined = spatial_join(fsq.iter().cloned().map(Arc::new), &index, &cfg).unwrap();
    let kept: BTreeSet<_> = filter_matches(score_candidates(joined, cfg.levenshtein_normalization), &cfg)
        .map(|c| c.map(|c| (c.fsq.id.clone(), c.osm.id.clone())))
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(kept, pairs(&run_conflation(&fsq, &osm, &cfg)));
    let truth: BTreeSet<_> = fx.true_pairs().map(|p| (p.fsq_id.clone(), p.osm_id.clone())).collect();
    assert_eq!(kept, truth);
}

#[test]
fn rejects_radius_beyond_index() {
    let index = OsmIndex::build(vec![rec("o", "x", 0.0, 0.0)], 50.0).unwrap();
    let cfg = ConflationConfig {
        radius_m: 80.0,
        ..Default::default()
    };
    assert!(spatial_join(Vec::<Arc<PoiRecord>>::new(), &index, &cfg).is_err());
}
