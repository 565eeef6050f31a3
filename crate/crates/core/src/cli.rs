//! Command-line surface: `conflate`, `graph` and `stats`.
//!
//! Exit codes: 0 on success, 1 on I/O, schema or data errors, 2 on bad flags
//! or invalid configuration. Diagnostics go to standard error; `stats`
//! prints its report to standard output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conflation::{
    conflate, Comparator, ConflationConfig, ConflationCounts, ConflationError, FilterMetric, JoinMode, MatchedPoi,
    OsmIndex,
};
use crate::graph::{build_knn_graph, dedupe_nodes, GraphError};
use crate::ingest::{
    read_matches_csv, read_poi_csv, write_atomic, write_edges_csv, write_matches_csv, IngestError, IngestStats,
    MatchesFormat, SourceFilter, SourceSchema,
};
use crate::similarity::LevenshteinNormalization;

#[derive(Debug, Parser)]
#[command(name = "poi-conflate", version, about = "Conflate Foursquare and OpenStreetMap POIs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join, score and filter two POI tables into the matched table.
    Conflate(ConflateArgs),
    /// Build the k-nearest-neighbor edge list from a matched table.
    Graph(GraphArgs),
    /// Summarize a matched table.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Lev,
    Trg,
    Both,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CmpArg {
    Ge,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JoinArg {
    All,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevNormArg {
    Max,
    Generalized,
}

#[derive(Debug, clap::Args)]
pub struct ConflateArgs {
    #[arg(long)]
    pub fsq: PathBuf,
    #[arg(long)]
    pub osm: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50.0, value_parser = positive_f64)]
    pub radius_m: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Lev)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = CmpArg::Ge)]
    pub cmp: CmpArg,
    #[arg(long, value_enum, default_value_t = JoinArg::All)]
    pub join_mode: JoinArg,
    #[arg(long, value_enum, default_value_t = LevNormArg::Max)]
    pub lev_norm: LevNormArg,
    /// Append a great-circle distance column (meters) after the standard columns.
    #[arg(long)]
    pub emit_distance_m: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub matches: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub k: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub matches: PathBuf,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Ok(_) => Err("must lie in [0, 1]".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Conflation(#[from] ConflationError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Conflation(ConflationError::InvalidConfig { .. }) => 2,
            _ => 1,
        }
    }
}

impl ConflateArgs {
    pub fn config(&self) -> ConflationConfig {
        ConflationConfig {
            radius_m: self.radius_m,
            join_mode: match self.join_mode {
                JoinArg::All => JoinMode::AllWithinRadius,
                JoinArg::Nearest => JoinMode::NearestOnly,
            },
            filter_metric: match self.metric {
                MetricArg::Lev => FilterMetric::Levenshtein,
                MetricArg::Trg => FilterMetric::Trigram,
                MetricArg::Both => FilterMetric::Both,
                MetricArg::Either => FilterMetric::Either,
            },
            threshold: self.threshold,
            comparator: match self.cmp {
                CmpArg::Ge => Comparator::AtLeast,
                CmpArg::Gt => Comparator::GreaterThan,
            },
            levenshtein_normalization: match self.lev_norm {
                LevNormArg::Max => LevenshteinNormalization::MaxLength,
                LevNormArg::Generalized => LevenshteinNormalization::Generalized,
            },
            ..ConflationConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every output. Everything except
/// `timing` is a pure function of the inputs and flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counts: serde_json::Value,
    pub timing: Timing,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub stages_ms: BTreeMap<String, f64>,
}

impl Timing {
    fn start() -> Self {
        Self {
            started_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            stages_ms: BTreeMap::new(),
        }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages_ms.insert(name.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConflateCounts {
    pub fsq: IngestStats,
    pub osm: IngestStats,
    pub conflation: ConflationCounts,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn digest(role: &str, path: &Path) -> Result<FileDigest, CliError> {
    Ok(FileDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

fn manifest_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, manifest).map_err(|e| IngestError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        io::Write::write_all(w, b"\n").map_err(|e| IngestError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(())
}

fn pool(threads: Option<u32>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n as usize);
    }
    Ok(b.build()?)
}

// Removes already-written outputs if a later stage fails.
fn finish_or_clean<T>(written: &[&Path], result: Result<T, CliError>) -> Result<T, CliError> {
    if result.is_err() {
        for p in written {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

pub fn cmd_conflate(args: &ConflateArgs) -> Result<RunManifest, CliError> {
    let cfg = args.config();
    cfg.validate()?;
    let mut timing = Timing::start();
    let pool = pool(args.threads)?;

    let (osm_records, osm_stats) = timing.stage("read_osm", || -> Result<_, CliError> {
        let mut reader = read_poi_csv(
            &args.osm,
            &SourceSchema::openstreetmap(),
            Some(SourceFilter::openstreetmap()),
        )?;
        let records = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
        Ok((records, reader.stats()))
    })?;
    let osm = timing.stage("index_osm", || OsmIndex::build(osm_records, cfg.radius_m))?;

    let mut fsq_reader = read_poi_csv(&args.fsq, &SourceSchema::foursquare(), None)?;
    let output = timing.stage("conflate", || {
        pool.install(|| conflate::<_, CliError>(fsq_reader.by_ref().map(|r| r.map_err(CliError::from)), &osm, &cfg))
    })?;
    let fsq_stats = fsq_reader.stats();

    let format = MatchesFormat {
        include_distance_m: args.emit_distance_m,
    };
    timing.stage("write", || write_matches_csv(&args.out, &output.matches, &format))?;

    let manifest_file = manifest_path(&args.out, &args.manifest);
    let result = (|| {
        let mut config = serde_json::to_value(&cfg).expect("config serializes");
        config["emit_distance_m"] = args.emit_distance_m.into();
        let manifest = RunManifest {
            command: "conflate".into(),
            config,
            inputs: vec![digest("fsq", &args.fsq)?, digest("osm", &args.osm)?],
            outputs: vec![digest("matches", &args.out)?],
            counts: serde_json::to_value(ConflateCounts {
                fsq: fsq_stats,
                osm: osm_stats,
                conflation: output.counts,
            })
            .expect("counts serialize"),
            timing,
        };
        write_manifest(&manifest_file, &manifest)?;
        Ok(manifest)
    })();
    finish_or_clean(&[&args.out], result)
}

pub fn cmd_graph(args: &GraphArgs) -> Result<RunManifest, CliError> {
    let mut timing = Timing::start();
    let pool = pool(args.threads)?;
    let matches = timing.stage("read_matches", || read_matches_csv(&args.matches))?;
    let nodes = timing.stage("dedupe", || dedupe_nodes(&matches))?;
    let edges = timing.stage("knn", || pool.install(|| build_knn_graph(&nodes, args.k as usize)))?;
    timing.stage("write", || write_edges_csv(&args.out, &edges))?;

    let manifest_file = manifest_path(&args.out, &args.manifest);
    let result = (|| {
        let manifest = RunManifest {
            command: "graph".into(),
            config: serde_json::json!({ "k": args.k }),
            inputs: vec![digest("matches", &args.matches)?],
            outputs: vec![digest("edges", &args.out)?],
            counts: serde_json::json!({
                "matches": matches.len(),
                "nodes": nodes.len(),
                "edges": edges.len(),
            }),
            timing,
        };
        write_manifest(&manifest_file, &manifest)?;
        Ok(manifest)
    })();
    finish_or_clean(&[&args.out], result)
}

pub const PERCENTILES: [u32; 6] = [0, 50, 90, 95, 99, 100];

/// Summary of a matched table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub rows: usize,
    pub distinct_fsq_ids: usize,
    /// Foursquare ids that appear on more than one row.
    pub duplicate_fsq_ids: usize,
    /// Ten equal-width bins over [0, 1]; 1.0 falls in the last bin.
    pub trg_histogram: [usize; 10],
    pub lev_histogram: [usize; 10],
    /// Nearest-rank percentiles at [`PERCENTILES`].
    pub distance_deg_percentiles: [f64; 6],
    pub distance_m_percentiles: [f64; 6],
}

fn nearest_rank(sorted: &[f64]) -> [f64; 6] {
    let mut out = [0.0; 6];
    if sorted.is_empty() {
        return out;
    }
    for (slot, &p) in out.iter_mut().zip(PERCENTILES.iter()) {
        let rank = ((p as f64 / 100.0) * sorted.len() as f64).ceil() as usize;
        *slot = sorted[rank.clamp(1, sorted.len()) - 1];
    }
    out
}

impl StatsReport {
    pub fn compute(matches: &[MatchedPoi]) -> Self {
        let bin = |v: f64| ((v * 10.0).floor() as usize).min(9);
        let mut trg = [0; 10];
        let mut lev = [0; 10];
        let mut per_id: BTreeMap<&str, usize> = BTreeMap::new();
        for m in matches {
            trg[bin(m.sim_trg.value())] += 1;
            lev[bin(m.sim_lev.value())] += 1;
            *per_id.entry(m.fsq.id.as_str()).or_default() += 1;
        }
        let mut deg: Vec<f64> = matches.iter().map(|m| m.distance_deg).collect();
        let mut met: Vec<f64> = matches.iter().map(|m| m.distance_m).collect();
        deg.sort_by(f64::total_cmp);
        met.sort_by(f64::total_cmp);
        Self {
            rows: matches.len(),
            distinct_fsq_ids: per_id.len(),
            duplicate_fsq_ids: per_id.values().filter(|&&n| n > 1).count(),
            trg_histogram: trg,
            lev_histogram: lev,
            distance_deg_percentiles: nearest_rank(&deg),
            distance_m_percentiles: nearest_rank(&met),
        }
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: {}", self.rows)?;
        writeln!(f, "distinct fsq_place_id: {}", self.distinct_fsq_ids)?;
        writeln!(f, "duplicate fsq_place_id: {}", self.duplicate_fsq_ids)?;
        for (label, hist) in [("trigram", &self.trg_histogram), ("levenshtein", &self.lev_histogram)] {
            writeln!(f, "{label} similarity histogram:")?;
            for (i, n) in hist.iter().enumerate() {
                let close = if i == 9 { ']' } else { ')' };
                writeln!(f, "  [{:.1}, {:.1}{close} {n}", i as f64 / 10.0, (i + 1) as f64 / 10.0)?;
            }
        }
        for (label, pct) in [
            ("fsq_osm_distance (deg)", &self.distance_deg_percentiles),
            ("great-circle distance (m)", &self.distance_m_percentiles),
        ] {
            writeln!(f, "{label} percentiles:")?;
            for (p, v) in PERCENTILES.iter().zip(pct.iter()) {
                writeln!(f, "  p{p}: {v}")?;
            }
        }
        Ok(())
    }
}

pub fn cmd_stats(args: &StatsArgs) -> Result<StatsReport, CliError> {
    let matches = read_matches_csv(&args.matches)?;
    Ok(StatsReport::compute(&matches))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Conflate(a) => cmd_conflate(a).map(|m| {
            eprintln!(
                "conflate: {} matches written to {}",
                m.counts["conflation"]["matched"],
                a.out.display()
            );
        }),
        Command::Graph(a) => cmd_graph(a).map(|m| {
            eprintln!("graph: {} edges written to {}", m.counts["edges"], a.out.display());
        }),
        Command::Stats(a) => cmd_stats(a).map(|report| print!("{report}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
