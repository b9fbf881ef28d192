//! Impurity and threshold search.

use serde::{Deserialize, Serialize};

use super::{Sample, TrainSet};
use crate::error::{Error, Result};

/// Scores closer than this are treated as tied.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    #[default]
    GainRatio,
    InfoGain,
}

/// Shannon entropy in bits of a class-count (or class-weight) vector.
pub fn entropy(counts: &[f64]) -> Result<f64> {
    if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::InvalidParam(
            "class counts must be finite and non-negative".into(),
        ));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParam("entropy of all-zero counts".into()));
    }
    Ok(entropy_of(counts, total))
}

pub(crate) fn entropy_of(counts: &[f64], total: f64) -> f64 {
    let mut h = 0.0;
    for &c in counts {
        if c > 0.0 {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Best threshold found on one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Criterion value (information gain or gain ratio).
    pub score: f64,
    pub gain: f64,
}

/// Midpoint between two consecutive distinct values that still routes the
/// lower value left and the upper value right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Searches every midpoint of `feature` over the sample members at `members`
/// (positions into `sample`). Both sides must carry at least `min_leaf`
/// weight. For gain ratio only thresholds whose gain reaches the mean gain
/// of all valid thresholds compete. Ties go to the lower threshold.
pub(crate) fn search_feature(
    data: &TrainSet,
    sample: &Sample,
    members: &[usize],
    feature: usize,
    criterion: SplitCriterion,
    min_leaf: f64,
) -> Option<SplitCandidate> {
    if members.len() < 2 {
        return None;
    }
    let n_classes = data.n_classes();
    let mut items: Vec<(f64, usize, f64)> = members
        .iter()
        .map(|&m| {
            let row = sample.rows[m];
            (data.value(row, feature), data.label(row), sample.weights[m])
        })
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    if items[0].0 == items[items.len() - 1].0 {
        return None;
    }

    let mut parent = vec![0.0; n_classes];
    for &(_, label, w) in &items {
        parent[label] += w;
    }
    let total: f64 = parent.iter().sum();
    let parent_h = entropy_of(&parent, total);

    // (threshold, gain, split_info)
    let mut candidates = Vec::new();
    let mut left = vec![0.0; n_classes];
    let mut right = parent.clone();
    for i in 0..items.len() - 1 {
        let (value, label, w) = items[i];
        left[label] += w;
        right[label] -= w;
        let next = items[i + 1].0;
        if next == value {
            continue;
        }
        let wl: f64 = left.iter().sum();
        let wr = total - wl;
        if wl < min_leaf || wr < min_leaf {
            continue;
        }
        let (pl, pr) = (wl / total, wr / total);
        let gain = parent_h - pl * entropy_of(&left, wl) - pr * entropy_of(&right, wr);
        let split_info = -(pl * pl.log2()) - pr * pr.log2();
        candidates.push((midpoint(value, next), gain, split_info));
    }
    if candidates.is_empty() {
        return None;
    }

    let floor = match criterion {
        SplitCriterion::InfoGain => f64::NEG_INFINITY,
        SplitCriterion::GainRatio => candidates.iter().map(|c| c.1).sum::<f64>() / candidates.len() as f64 - TIE_EPS,
    };
    let mut best: Option<SplitCandidate> = None;
    for &(threshold, gain, split_info) in &candidates {
        if gain < floor {
            continue;
        }
        let score = match criterion {
            SplitCriterion::InfoGain => gain,
            SplitCriterion::GainRatio => gain / split_info,
        };
        if best.is_none_or(|b| score > b.score + TIE_EPS) {
            best = Some(SplitCandidate {
                feature,
                threshold,
                score,
                gain,
            });
        }
    }
    best
}

/// Best binary split of `feature` over the whole training set, or `None`
/// when the feature is constant.
pub fn best_split(data: &TrainSet, feature: usize, criterion: SplitCriterion) -> Option<SplitCandidate> {
    let sample = Sample::uniform(data.len());
    let members: Vec<usize> = (0..data.len()).collect();
    search_feature(data, &sample, &members, feature, criterion, 0.0)
}
