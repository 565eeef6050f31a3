//! Spatial join, name scoring, threshold filtering and `poi_id` assignment.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geo::degree_distance;
use crate::index::{build_index, GridIndex, IndexError, NeighborIndex};
use crate::ingest::PoiRecord;
use crate::similarity::{levenshtein_similarity_with, trigram_similarity, LevenshteinNormalization, SimilarityScore};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConflationError {
    #[error("invalid {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("candidate ({fsq_id}, {osm_id}) has not been scored")]
    Unscored { fsq_id: String, osm_id: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinMode {
    /// Only the closest OSM record within the radius.
    NearestOnly,
    /// Every OSM record within the radius.
    #[default]
    AllWithinRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMetric {
    #[default]
    Levenshtein,
    Trigram,
    Both,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// `score >= threshold`
    #[default]
    AtLeast,
    /// `score > threshold`
    GreaterThan,
}

impl Comparator {
    pub fn holds(self, score: f64, threshold: f64) -> bool {
        match self {
            Comparator::AtLeast => score >= threshold,
            Comparator::GreaterThan => score > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflationConfig {
    pub radius_m: f64,
    pub join_mode: JoinMode,
    pub filter_metric: FilterMetric,
    pub threshold: f64,
    pub comparator: Comparator,
    pub k: usize,
    pub levenshtein_normalization: LevenshteinNormalization,
}

impl Default for ConflationConfig {
    fn default() -> Self {
        Self {
            radius_m: 50.0,
            join_mode: JoinMode::AllWithinRadius,
            filter_metric: FilterMetric::Levenshtein,
            threshold: 0.5,
            comparator: Comparator::AtLeast,
            k: 10,
            levenshtein_normalization: LevenshteinNormalization::MaxLength,
        }
    }
}

impl ConflationConfig {
    pub fn validate(&self) -> Result<(), ConflationError> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(ConflationError::InvalidConfig {
                field: "radius_m",
                message: format!("must be a positive number of meters, got {}", self.radius_m),
            });
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConflationError::InvalidConfig {
                field: "threshold",
                message: format!("must lie in [0, 1], got {}", self.threshold),
            });
        }
        if self.k == 0 {
            return Err(ConflationError::InvalidConfig {
                field: "k",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// A spatially joined pair, scored or not.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchCandidate {
    pub fsq: Arc<PoiRecord>,
    pub osm: Arc<PoiRecord>,
    pub distance_deg: f64,
    pub distance_m: f64,
    pub sim_trg: Option<SimilarityScore>,
    pub sim_lev: Option<SimilarityScore>,
}

/// A retained match with its primary key.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPoi {
    pub poi_id: u64,
    pub fsq: Arc<PoiRecord>,
    pub osm: Arc<PoiRecord>,
    pub distance_deg: f64,
    pub distance_m: f64,
    pub sim_trg: SimilarityScore,
    pub sim_lev: SimilarityScore,
}

/// OSM records plus a grid index over their coordinates.
#[derive(Debug, Clone)]
pub struct OsmIndex {
    records: Vec<Arc<PoiRecord>>,
    index: GridIndex,
}

impl OsmIndex {
    pub fn build(records: Vec<PoiRecord>, radius_m: f64) -> Result<Self, ConflationError> {
        let records: Vec<Arc<PoiRecord>> = records.into_iter().map(Arc::new).collect();
        let index = build_index(records.iter().enumerate().map(|(i, r)| (i, r.point)), radius_m)?;
        Ok(Self { records, index })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Arc<PoiRecord>] {
        &self.records
    }

    pub fn grid(&self) -> &GridIndex {
        &self.index
    }
}

fn join_one(fsq: &Arc<PoiRecord>, osm: &OsmIndex, cfg: &ConflationConfig) -> Vec<MatchCandidate> {
    let mut hits = osm
        .index
        .radius_query(fsq.point, cfg.radius_m)
        .expect("radius checked against the index before joining");
    if cfg.join_mode == JoinMode::NearestOnly {
        hits.truncate(1);
    }
    hits.into_iter()
        .map(|(ordinal, distance_m)| {
            let o = &osm.records[ordinal];
            MatchCandidate {
                fsq: Arc::clone(fsq),
                osm: Arc::clone(o),
                distance_deg: degree_distance(fsq.point, o.point),
                distance_m,
                sim_trg: None,
                sim_lev: None,
            }
        })
        .collect()
}

fn check_radius(osm: &OsmIndex, cfg: &ConflationConfig) -> Result<(), ConflationError> {
    cfg.validate()?;
    if cfg.radius_m > osm.index.radius_m() {
        return Err(IndexError::RadiusExceedsBuild {
            requested: cfg.radius_m,
            built: osm.index.radius_m(),
        }
        .into());
    }
    Ok(())
}

/// Pairs each Foursquare record with the OSM records within `cfg.radius_m`.
/// Candidates come out in input order, then by distance and OSM ordinal.
pub fn spatial_join<'a, I>(
    fsq: I,
    osm: &'a OsmIndex,
    cfg: &'a ConflationConfig,
) -> Result<impl Iterator<Item = MatchCandidate> + 'a, ConflationError>
where
    I: IntoIterator<Item = Arc<PoiRecord>>,
    I::IntoIter: 'a,
{
    check_radius(osm, cfg)?;
    Ok(fsq.into_iter().flat_map(move |r| join_one(&r, osm, cfg)))
}

pub fn score(mut c: MatchCandidate, policy: LevenshteinNormalization) -> MatchCandidate {
    c.sim_trg = Some(trigram_similarity(&c.fsq.name, &c.osm.name));
    c.sim_lev = Some(levenshtein_similarity_with(&c.fsq.name, &c.osm.name, policy));
    c
}

/// Populates both similarity columns.
pub fn score_candidates<I>(candidates: I, policy: LevenshteinNormalization) -> impl Iterator<Item = MatchCandidate>
where
    I: IntoIterator<Item = MatchCandidate>,
{
    candidates.into_iter().map(move |c| score(c, policy))
}

/// Whether a scored candidate passes the configured threshold predicate.
pub fn passes(c: &MatchCandidate, cfg: &ConflationConfig) -> Result<bool, ConflationError> {
    let (Some(trg), Some(lev)) = (c.sim_trg, c.sim_lev) else {
        return Err(ConflationError::Unscored {
            fsq_id: c.fsq.id.clone(),
            osm_id: c.osm.id.clone(),
        });
    };
    let ok = |s: SimilarityScore| cfg.comparator.holds(s.value(), cfg.threshold);
    Ok(match cfg.filter_metric {
        FilterMetric::Levenshtein => ok(lev),
        FilterMetric::Trigram => ok(trg),
        FilterMetric::Both => ok(lev) && ok(trg),
        FilterMetric::Either => ok(lev) || ok(trg),
    })
}

/// Keeps candidates passing the threshold predicate.
pub fn filter_matches<'a, I>(
    candidates: I,
    cfg: &'a ConflationConfig,
) -> impl Iterator<Item = Result<MatchCandidate, ConflationError>> + 'a
where
    I: IntoIterator<Item = MatchCandidate>,
    I::IntoIter: 'a,
{
    candidates.into_iter().filter_map(move |c| match passes(&c, cfg) {
        Ok(true) => Some(Ok(c)),
        Ok(false) => None,
        Err(e) => Some(Err(e)),
    })
}

/// Sorts by `(fsq_place_id, osm_id)` (stable, so input order breaks ties)
/// and numbers the rows `1..=n`.
pub fn assign_poi_ids(mut matches: Vec<MatchCandidate>) -> Result<Vec<MatchedPoi>, ConflationError> {
    matches.sort_by(|a, b| a.fsq.id.cmp(&b.fsq.id).then_with(|| a.osm.id.cmp(&b.osm.id)));
    matches
        .into_iter()
        .zip(1u64..)
        .map(|(c, poi_id)| match (c.sim_trg, c.sim_lev) {
            (Some(sim_trg), Some(sim_lev)) => Ok(MatchedPoi {
                poi_id,
                fsq: c.fsq,
                osm: c.osm,
                distance_deg: c.distance_deg,
                distance_m: c.distance_m,
                sim_trg,
                sim_lev,
            }),
            _ => Err(ConflationError::Unscored {
                fsq_id: c.fsq.id.clone(),
                osm_id: c.osm.id.clone(),
            }),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConflationCounts {
    pub fsq_records: u64,
    pub candidates: u64,
    pub matched: u64,
    pub filtered_out: u64,
}

#[derive(Debug, Clone)]
pub struct ConflationOutput {
    pub matches: Vec<MatchedPoi>,
    pub counts: ConflationCounts,
}

/// Foursquare records joined and scored per batch in parallel.
const BATCH: usize = 4096;

/// Runs join, scoring, filtering and id assignment over a Foursquare stream.
///
/// Work is spread over the current rayon pool in fixed-size batches whose
/// results are concatenated in input order, so the output does not depend on
/// the number of workers.
pub fn conflate<I, E>(fsq: I, osm: &OsmIndex, cfg: &ConflationConfig) -> Result<ConflationOutput, E>
where
    I: IntoIterator<Item = Result<PoiRecord, E>>,
    E: From<ConflationError>,
{
    check_radius(osm, cfg)?;
    let mut counts = ConflationCounts::default();
    let mut kept = Vec::new();
    let mut batch: Vec<Arc<PoiRecord>> = Vec::with_capacity(BATCH);
    let mut fsq = fsq.into_iter();

    loop {
        batch.clear();
        for rec in fsq.by_ref().take(BATCH) {
            batch.push(Arc::new(rec?));
        }
        if batch.is_empty() {
            break;
        }
        counts.fsq_records += batch.len() as u64;
        let scored: Vec<Vec<MatchCandidate>> = batch
            .par_iter()
            .map(|r| {
                join_one(r, osm, cfg)
                    .into_iter()
                    .map(|c| score(c, cfg.levenshtein_normalization))
                    .collect()
            })
            .collect();
        for c in scored.into_iter().flatten() {
            counts.candidates += 1;
            if passes(&c, cfg)? {
                kept.push(c);
            } else {
                counts.filtered_out += 1;
            }
        }
        if batch.len() < BATCH {
            break;
        }
    }

    let matches = assign_poi_ids(kept)?;
    counts.matched = matches.len() as u64;
    Ok(ConflationOutput { matches, counts })
}
