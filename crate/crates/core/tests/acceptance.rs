//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p poi-conflate --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use clap::Parser;
use common::{
    brute_knn, brute_knn_graph, brute_radius, bundled_sources, data_dir, group_edges, load_sources, naive_levenshtein,
    run_conflation, trigram_similarity_oracle,
};
use poi_conflate::cli::{cmd_conflate, cmd_graph, Cli, Command};
use poi_conflate::conflation::ConflationConfig;
use poi_conflate::fixture::{duplicate_fixture, synthetic, PairKind, FIXTURE_SEED};
use poi_conflate::geo::{degree_distance, haversine_m, GeoPoint};
use poi_conflate::graph::{build_knn_graph, dedupe_nodes};
use poi_conflate::index::{build_index, NeighborIndex};
use poi_conflate::ingest::{write_edges, EDGE_HEADER};
use poi_conflate::similarity::{levenshtein_distance, trigram_similarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEGREE_TOL: f64 = 1e-9;
const HAVERSINE_TOL_M: f64 = 0.01;
const EDGE_REL_TOL: f64 = 1e-6;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn degree_fixed_point() -> Check {
    let d = degree_distance(pt(33.768107, -84.34941113), pt(33.7680684, -84.3494503));
    let err = (d - 5.499317e-05).abs();
    ensure(err <= DEGREE_TOL, || format!("got {d:e}, error {err:e}"))?;
    Ok(format!("{d:.6e}, error {err:.1e}"))
}

fn great_circle_calibration() -> Check {
    let d = haversine_m(pt(0.0, 0.0), pt(0.0, 1.0));
    ensure((d - 111_194.93).abs() <= HAVERSINE_TOL_M, || {
        format!("one degree = {d} m")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10_000 {
        let a = pt(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
        let b = pt(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
        ensure(haversine_m(a, b) == haversine_m(b, a), || {
            format!("asymmetric at {a:?} {b:?}")
        })?;
        ensure(haversine_m(a, a) == 0.0, || format!("nonzero self distance at {a:?}"))?;
        ensure(a == b || haversine_m(a, b) > 0.0, || {
            format!("zero distance for {a:?} != {b:?}")
        })?;
    }
    Ok(format!(
        "one degree = {d:.4} m, 10000 pairs symmetric and zero-on-equal"
    ))
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max: usize) -> String {
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

fn similarity_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let abcd = ['a', 'b', 'c', 'd'];
    for _ in 0..5_000 {
        let (a, b) = (random_word(&mut rng, &abcd, 8), random_word(&mut rng, &abcd, 8));
        let want = naive_levenshtein(&a.chars().collect::<Vec<_>>(), &b.chars().collect::<Vec<_>>());
        let got = levenshtein_distance(&a, &b);
        ensure(got == want, || {
            format!("levenshtein({a:?}, {b:?}) = {got}, oracle {want}")
        })?;
    }
    let letters: Vec<char> = "abcdefghijklmnopqrstuvwxyz éü0123".chars().collect();
    for _ in 0..1_000 {
        let (a, b) = (random_word(&mut rng, &letters, 12), random_word(&mut rng, &letters, 12));
        let (got, want) = (trigram_similarity(&a, &b).value(), trigram_similarity_oracle(&a, &b));
        ensure(got == want, || format!("trigram({a:?}, {b:?}) = {got}, oracle {want}"))?;
    }
    Ok("5000 levenshtein pairs, 1000 trigram pairs, all exact".into())
}

fn spatial_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut queries = 0;
    for instance in 0..50 {
        let n = rng.random_range(1..=1000);
        // Every fifth instance is a Greenland-latitude cluster.
        let (lat0, lon0, spread): (f64, f64, f64) = match instance % 5 {
            0 => (70.0, -51.0, 0.01),
            1 => (rng.random_range(-60.0..60.0), rng.random_range(-170.0..170.0), 0.002),
            _ => (
                rng.random_range(-80.0..80.0),
                rng.random_range(-175.0..175.0),
                rng.random_range(0.001..0.05),
            ),
        };
        let pts: Vec<(usize, GeoPoint)> = (0..n)
            .map(|i| {
                let lat = (lat0 + rng.random_range(-spread..spread)).clamp(-90.0, 90.0);
                (i, pt(lat, lon0 + rng.random_range(-spread..spread) * 3.0))
            })
            .collect();
        let radius = [10.0, 50.0, 200.0][instance % 3];
        let idx = build_index(pts.clone(), radius).map_err(|e| e.to_string())?;
        for q in 0..40 {
            let (exclude, center) = if q % 2 == 0 {
                let (o, p) = pts[rng.random_range(0..n)];
                (Some(o), p)
            } else {
                (
                    None,
                    pt(
                        lat0 + rng.random_range(-spread..spread),
                        lon0 + rng.random_range(-spread..spread) * 3.0,
                    ),
                )
            };
            let got = idx.radius_query(center, radius).map_err(|e| e.to_string())?;
            ensure(got == brute_radius(&pts, center, radius), || {
                format!("radius miss, instance {instance}")
            })?;
            let k = [1, 5, 10, 50][q % 4];
            ensure(
                idx.knn_query(center, k, exclude) == brute_knn(&pts, center, k, exclude),
                || format!("knn miss, instance {instance}"),
            )?;
            queries += 2;
        }
    }
    Ok(format!("50 instances, {queries} queries, zero misses"))
}

fn pipeline_oracle() -> Check {
    let fx = synthetic(FIXTURE_SEED);
    let (fsq, osm) = bundled_sources();
    ensure(fsq.len() == 200, || format!("{} fixture POIs", fsq.len()))?;
    let count = |k| fx.planted.iter().filter(|p| p.kind == k).count();
    ensure(
        (
            count(PairKind::True),
            count(PairKind::NearMiss),
            count(PairKind::NameMismatch),
        ) == (80, 40, 40),
        || "planted counts differ".into(),
    )?;
    let out = run_conflation(&fsq, &osm, &ConflationConfig::default());
    let got: BTreeSet<_> = out
        .matches
        .iter()
        .map(|m| (m.fsq.id.clone(), m.osm.id.clone()))
        .collect();
    let truth: BTreeSet<_> = fx.true_pairs().map(|p| (p.fsq_id.clone(), p.osm_id.clone())).collect();
    let tp = got.intersection(&truth).count() as f64;
    let (precision, recall) = (tp / got.len() as f64, tp / truth.len() as f64);
    ensure(precision == 1.0 && recall == 1.0, || {
        format!("precision {precision}, recall {recall}")
    })?;
    Ok(format!("{} matches, precision {precision}, recall {recall}", got.len()))
}

fn threshold_monotonicity() -> Check {
    let (fsq, osm) = bundled_sources();
    let mut prev: Option<BTreeSet<(String, String)>> = None;
    let mut counts = Vec::new();
    for t in [0.3, 0.5, 0.7, 0.9] {
        let cfg = ConflationConfig {
            threshold: t,
            ..Default::default()
        };
        let kept: BTreeSet<_> = run_conflation(&fsq, &osm, &cfg)
            .matches
            .iter()
            .map(|m| (m.fsq.id.clone(), m.osm.id.clone()))
            .collect();
        if let Some(p) = &prev {
            ensure(kept.is_subset(p), || {
                format!("set at {t} is not a subset of the previous")
            })?;
        }
        counts.push(kept.len());
        prev = Some(kept);
    }
    Ok(format!("counts at 0.3/0.5/0.7/0.9: {counts:?}"))
}

fn graph_contract() -> Check {
    let (fsq, osm) = bundled_sources();
    let matches = run_conflation(&fsq, &osm, &ConflationConfig::default()).matches;
    let nodes = dedupe_nodes(&matches).map_err(|e| e.to_string())?;
    let edges = build_knn_graph(&nodes, 10).map_err(|e| e.to_string())?;
    let n = nodes.len();
    let grouped = group_edges(&edges);
    let oracle = brute_knn_graph(&nodes, 10);
    for (src, want) in &oracle {
        let got = grouped.get(src).cloned().unwrap_or_default();
        ensure(got.len() == 10.min(n - 1), || {
            format!("{src} has out-degree {}", got.len())
        })?;
        let ids = |v: &[(String, f64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        ensure(ids(&got) == ids(want), || format!("{src} neighbors differ from oracle"))?;
    }
    let point = |id: &str| nodes.iter().find(|x| x.fsq_place_id == id).unwrap().point;
    for e in &edges {
        let d = haversine_m(point(&e.source), point(&e.destination));
        ensure((e.distance_m - d).abs() <= EDGE_REL_TOL * d, || {
            format!("{} -> {}: {} vs {d}", e.source, e.destination, e.distance_m)
        })?;
    }

    let mut buf = Vec::new();
    write_edges(&mut buf, &edges).map_err(|e| e.to_string())?;
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    ensure(
        lines.next() == Some("fsq_place_id_source,fsq_place_id_destination,distance_m"),
        || "header".into(),
    )?;
    ensure(
        EDGE_HEADER.join(",") == "fsq_place_id_source,fsq_place_id_destination,distance_m",
        || "header const".into(),
    )?;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let want = format!("{:.2}", haversine_m(point(f[0]), point(f[1])));
        ensure(f.len() == 3 && f[2] == want, || {
            format!("line `{line}`, expected distance {want}")
        })?;
    }
    let golden = std::fs::read_to_string(data_dir().join("golden").join("edges.csv")).unwrap();
    ensure(golden == text, || "edge list differs from golden".into())?;
    Ok(format!("{n} nodes, {} edges, oracle-equal", edges.len()))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let cli =
        Cli::try_parse_from(std::iter::once("poi-conflate").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    match &cli.command {
        Command::Conflate(a) => cmd_conflate(a).map(drop),
        Command::Graph(a) => cmd_graph(a).map(drop),
        Command::Stats(_) => unreachable!(),
    }
    .map_err(|e| e.to_string())
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for f in ["fsq.csv", "osm.csv"] {
        std::fs::copy(data_dir().join("fixture").join(f), dir.join(f)).unwrap();
    }
    let p = |f: &str| dir.join(f).display().to_string();
    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for (run, threads) in ["1", "8", "1", "8"].iter().enumerate() {
        let (m, e) = (p(&format!("m{run}.csv")), p(&format!("e{run}.csv")));
        run_cli(&[
            "conflate",
            "--fsq",
            &p("fsq.csv"),
            "--osm",
            &p("osm.csv"),
            "--out",
            &m,
            "--threads",
            threads,
        ])?;
        run_cli(&["graph", "--matches", &m, "--out", &e, "--threads", threads])?;
        outputs.push((std::fs::read(&m).unwrap(), std::fs::read(&e).unwrap()));
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "outputs differ between runs".into()
    })?;
    let golden = |f: &str| std::fs::read(data_dir().join("golden").join(f)).unwrap();
    ensure(outputs[0] == (golden("matches.csv"), golden("edges.csv")), || {
        "outputs differ from golden".into()
    })?;
    Ok("4 runs (threads 1, 8, 1, 8) byte-identical and equal to golden".into())
}

fn duplicate_semantics() -> Check {
    let fx = duplicate_fixture();
    let (fsq, osm) = load_sources(&fx.fsq_csv, &fx.osm_csv);
    let matches = run_conflation(&fsq, &osm, &ConflationConfig::default()).matches;
    let id = "4f1d2c3b4a5968778695a4b3";
    let rows: Vec<_> = matches.iter().filter(|m| m.fsq.id == id).collect();
    ensure(rows.len() == 2, || format!("{} rows for the duplicated id", rows.len()))?;
    ensure(rows[0].poi_id != rows[1].poi_id, || "poi_ids collide".into())?;
    let nodes = dedupe_nodes(&matches).map_err(|e| e.to_string())?;
    let hits = nodes.iter().filter(|n| n.fsq_place_id == id).count();
    ensure(hits == 1, || format!("{hits} graph nodes for the duplicated id"))?;
    Ok(format!(
        "2 rows (poi_id {} and {}), 1 node",
        rows[0].poi_id, rows[1].poi_id
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        (
            1,
            "degree distance fixed point",
            Duration::from_secs(1),
            degree_fixed_point,
        ),
        (
            2,
            "great-circle calibration",
            Duration::from_secs(1),
            great_circle_calibration,
        ),
        (3, "similarity oracles", Duration::from_secs(10), similarity_oracles),
        (4, "spatial exactness", Duration::from_secs(30), spatial_exactness),
        (5, "pipeline oracle", Duration::from_secs(5), pipeline_oracle),
        (
            6,
            "threshold monotonicity",
            Duration::from_secs(5),
            threshold_monotonicity,
        ),
        (7, "graph contract", Duration::from_secs(5), graph_contract),
        (8, "determinism", Duration::from_secs(10), determinism),
        (9, "duplicate semantics", Duration::from_secs(1), duplicate_semantics),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let elapsed = t.elapsed();
        let result = match result {
            Ok(d) if elapsed > budget => Err(format!("{d}; took {elapsed:.2?}, budget {budget:.0?}")),
            r => r,
        };
        match &result {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({elapsed:.2?})"),
            Err(why) => {
                println!("FAIL [{id}] {name}: {why} ({elapsed:.2?})");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
