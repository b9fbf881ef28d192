//! SMOTE oversampling and whole-dataset class balancing.
//!
//! Neighbor search runs on raw (unscaled) features with Euclidean distance.
//! Equidistant neighbors are ordered by original row index.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, N_FEATURES};
use crate::rng::{Purpose, RngSeed};

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// How far each class is grown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BalanceTarget {
    /// Every class grows to the majority-class count.
    #[default]
    Majority,
    /// Every class smaller than this grows to exactly this many rows.
    Count(usize),
    /// Every non-majority class gains `round(size * pct / 100)` synthetic rows.
    Percent(f64),
}

impl fmt::Display for BalanceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalanceTarget::Majority => write!(f, "majority"),
            BalanceTarget::Count(n) => write!(f, "count:{n}"),
            BalanceTarget::Percent(p) => write!(f, "percent:{p}"),
        }
    }
}

impl FromStr for BalanceTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam(format!("bad balance target `{s}` (majority | count:N | percent:P)"));
        match s.trim().split_once(':') {
            None if s.trim() == "majority" => Ok(BalanceTarget::Majority),
            Some(("count", n)) => n.trim().parse().map(BalanceTarget::Count).map_err(|_| bad()),
            Some(("percent", p)) => match p.trim().parse::<f64>() {
                Ok(p) if p.is_finite() && p >= 0.0 => Ok(BalanceTarget::Percent(p)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteParams {
    pub k_neighbors: usize,
    pub target: BalanceTarget,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            k_neighbors: DEFAULT_K_NEIGHBORS,
            target: BalanceTarget::Majority,
        }
    }
}

fn squared_distance(a: &[f64; N_FEATURES], b: &[f64; N_FEATURES]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For every row, the indices of its `min(k, n - 1)` nearest other rows.
/// A lone row is its own neighbor.
pub fn nearest_neighbors(rows: &[FeatureVector], k: usize) -> Vec<Vec<usize>> {
    let n = rows.len();
    if n == 1 {
        return vec![vec![0]];
    }
    let k = k.min(n - 1);
    (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(&rows[i].values, &rows[j].values), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

fn smote_with_rng(
    rows: &[FeatureVector],
    n_synthetic: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<FeatureVector>> {
    if n_synthetic == 0 {
        return Ok(Vec::new());
    }
    if rows.is_empty() {
        return Err(Error::Empty("SMOTE needs at least one minority row"));
    }
    if k == 0 {
        return Err(Error::InvalidParam("SMOTE k_neighbors must be at least 1".into()));
    }
    let label = rows[0].label;
    if rows.iter().any(|r| r.label != label) {
        return Err(Error::InvalidParam("SMOTE rows must share one class".into()));
    }
    let neighbors = nearest_neighbors(rows, k);
    // Bases are visited round-robin over a seeded permutation.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let mut out = Vec::with_capacity(n_synthetic);
    for s in 0..n_synthetic {
        let base = order[s % order.len()];
        let candidates = &neighbors[base];
        let neighbor = candidates[rng.gen_range(0..candidates.len())];
        let gap: f64 = rng.gen();
        let (x, nb) = (&rows[base].values, &rows[neighbor].values);
        let mut values = [0.0; N_FEATURES];
        for f in 0..N_FEATURES {
            values[f] = x[f] + gap * (nb[f] - x[f]);
        }
        out.push(FeatureVector {
            location_id: format!("synthetic-{label}-{s}"),
            values,
            label,
            synthetic: true,
        });
    }
    Ok(out)
}

/// Generates `n_synthetic` SMOTE points for one class.
///
/// All rows must carry the same label; the class's half-point code selects
/// the random stream, so the result depends only on `seed` and `rows`.
pub fn smote_class(rows: &[FeatureVector], n_synthetic: usize, k: usize, seed: RngSeed) -> Result<Vec<FeatureVector>> {
    let stream = rows.first().map_or(0, |r| u64::from(r.label.code()));
    smote_with_rng(rows, n_synthetic, k, &mut seed.rng(Purpose::Smote, stream))
}

/// Number of synthetic rows each class receives under `target`.
pub fn synthetic_counts(class_counts: &[usize], target: BalanceTarget) -> Vec<usize> {
    let majority = class_counts.iter().copied().max().unwrap_or(0);
    class_counts
        .iter()
        .map(|&size| match target {
            BalanceTarget::Majority => majority - size,
            BalanceTarget::Count(n) => n.saturating_sub(size),
            BalanceTarget::Percent(_) if size == majority => 0,
            BalanceTarget::Percent(p) => (size as f64 * p / 100.0).round() as usize,
        })
        .collect()
}

/// Oversamples every class up to the configured target.
///
/// Original rows come first, unchanged and in input order, followed by the
/// synthetic rows of each class in class-set order.
pub fn balance(dataset: &Dataset, params: &SmoteParams, seed: RngSeed) -> Result<Dataset> {
    if params.k_neighbors == 0 {
        return Err(Error::InvalidParam("SMOTE k_neighbors must be at least 1".into()));
    }
    let counts = dataset.class_counts();
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidParam(format!(
            "class {} has no rows to oversample",
            dataset.class_set[i]
        )));
    }
    let extra = synthetic_counts(&counts, params.target);
    let synthetic: Vec<Vec<FeatureVector>> = dataset
        .class_set
        .par_iter()
        .zip(extra.par_iter())
        .map(|(&label, &n)| {
            let members: Vec<FeatureVector> = dataset.rows.iter().filter(|r| r.label == label).cloned().collect();
            smote_class(&members, n, params.k_neighbors, seed)
        })
        .collect::<Result<_>>()?;
    let mut rows = dataset.rows.clone();
    rows.extend(synthetic.into_iter().flatten());
    Ok(Dataset {
        rows,
        class_set: dataset.class_set.clone(),
    })
}
