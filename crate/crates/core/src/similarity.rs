//! Name normalization and the two name-similarity metrics.
//!
//! Trigrams follow the PostgreSQL `pg_trgm` construction: words are runs of
//! alphanumeric characters, each padded with two leading blanks and one
//! trailing blank, and the score is the Jaccard index of the two
//! de-duplicated trigram sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A similarity value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(Self(value + 0.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SimilarityScore {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v).ok_or_else(|| format!("similarity {v} outside [0, 1]"))
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Lowercase, trim, and collapse internal whitespace runs to one space.
pub fn normalize_name(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

type Trigram = [char; 3];

// Sorted, de-duplicated trigrams of an already-normalized string.
fn trigrams(s: &str) -> Vec<Trigram> {
    let mut out = Vec::new();
    for word in s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = [' ', ' ']
            .into_iter()
            .chain(word.chars())
            .chain(std::iter::once(' '))
            .collect();
        out.extend(padded.windows(3).map(|w| [w[0], w[1], w[2]]));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The padded trigram set of a name, as compared by [`trigram_similarity`].
pub fn trigram_set(s: &str) -> BTreeSet<String> {
    trigrams(&normalize_name(s))
        .into_iter()
        .map(|t| t.iter().collect())
        .collect()
}

/// `|T(a) ∩ T(b)| / |T(a) ∪ T(b)|` over normalized names.
pub fn trigram_similarity(a: &str, b: &str) -> SimilarityScore {
    let ta = trigrams(&normalize_name(a));
    let tb = trigrams(&normalize_name(b));
    if ta.is_empty() && tb.is_empty() {
        return SimilarityScore::ONE;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < ta.len() && j < tb.len() {
        match ta[i].cmp(&tb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = ta.len() + tb.len() - common;
    SimilarityScore(common as f64 / union as f64)
}

/// Unit-cost edit distance over the normalized names, in Unicode scalar values.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = normalize_name(a).chars().collect();
    let b: Vec<char> = normalize_name(b).chars().collect();
    edit_distance(&a, &b)
}

fn edit_distance(a: &[char], b: &[char]) -> usize {
    // Common prefix and suffix never change the distance.
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }

    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if lc == sc {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[short.len()]
}

/// How an edit distance is turned into a similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevenshteinNormalization {
    /// `1 - d / max(|a|, |b|)`.
    #[default]
    MaxLength,
    /// `1 - 2d / (|a| + |b| + d)`, the generalized normalized metric of Yujian and Bo.
    Generalized,
}

/// Normalized Levenshtein similarity with the default `1 - d / max(|a|, |b|)` policy.
pub fn levenshtein_similarity(a: &str, b: &str) -> SimilarityScore {
    levenshtein_similarity_with(a, b, LevenshteinNormalization::MaxLength)
}

pub fn levenshtein_similarity_with(a: &str, b: &str, policy: LevenshteinNormalization) -> SimilarityScore {
    let a: Vec<char> = normalize_name(a).chars().collect();
    let b: Vec<char> = normalize_name(b).chars().collect();
    if a.is_empty() && b.is_empty() {
        return SimilarityScore::ONE;
    }
    let d = edit_distance(&a, &b) as f64;
    let v = match policy {
        LevenshteinNormalization::MaxLength => 1.0 - d / a.len().max(b.len()) as f64,
        LevenshteinNormalization::Generalized => 1.0 - 2.0 * d / ((a.len() + b.len()) as f64 + d),
    };
    SimilarityScore(v.clamp(0.0, 1.0))
}
