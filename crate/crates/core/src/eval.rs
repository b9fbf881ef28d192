//! Stratified cross-validation, confusion matrices and macro-averaged metrics.
//!
//! A class that is never predicted has undefined precision (0/0). That state
//! is kept as [`Score::Undefined`] and makes the macro precision undefined
//! too, instead of being silently read as zero.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ensemble::EnsembleMethod;
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::label::ClassLabel;
use crate::model::Learner;
use crate::rng::{Purpose, RngSeed};
use crate::sampling::{balance, SmoteParams};
use crate::trees::TrainSet;

/// A percentage that may be undefined. Serializes as a number or the string
/// `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Defined(f64),
    Undefined,
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Defined(v) => Some(v),
            Score::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, Score::Undefined)
    }
}

impl fmt::Display for Score {
    /// Two decimals, or `Undefined`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Defined(v) => write!(f, "{v:.2}"),
            Score::Undefined => write!(f, "Undefined"),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Score::Defined(v) => s.serialize_f64(*v),
            Score::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Score::Defined(v)),
            Raw::Text(t) if t == "undefined" => Ok(Score::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unexpected score `{t}`"))),
        }
    }
}

/// `counts[i][j]` = instances of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<ClassLabel>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    /// Builds a matrix from `(truth, predicted)` class-index pairs.
    pub fn from_pairs(classes: Vec<ClassLabel>, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut cm = ConfusionMatrix::new(classes);
        for &(t, p) in pairs {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.classes.len();
        if truth >= k || predicted >= k {
            return Err(Error::InvalidParam(format!("class index outside 0..{k}")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassLabel,
    pub precision: Score,
    pub recall: f64,
    pub support: u64,
}

/// Accuracy and macro precision/recall, all in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: Score,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if cm.classes.is_empty() || total == 0 {
        return Err(Error::Empty("confusion matrix has no entries"));
    }
    let per_class: Vec<ClassMetrics> = cm
        .classes
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let hits = cm.counts[i][i] as f64;
            let predicted = cm.column_sum(i);
            let support = cm.row_sum(i);
            ClassMetrics {
                class,
                precision: if predicted == 0 {
                    Score::Undefined
                } else {
                    Score::Defined(100.0 * hits / predicted as f64)
                },
                recall: if support == 0 {
                    0.0
                } else {
                    100.0 * hits / support as f64
                },
                support,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let macro_precision = per_class
        .iter()
        .map(|c| c.precision.value())
        .sum::<Option<f64>>()
        .map_or(Score::Undefined, |s| Score::Defined(s / k));
    Ok(Metrics {
        accuracy: 100.0 * cm.correct() as f64 / total as f64,
        macro_precision,
        macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / k,
        per_class,
    })
}

/// Assigns row indices to `k` folds so every class is spread as evenly as
/// possible: per class, fold sizes differ by at most one.
///
/// Each class is shuffled on its own seeded stream; the shuffled classes are
/// then dealt round-robin, continuing the deal from one class to the next.
pub fn stratified_fold_indices(labels: &[usize], n_classes: usize, k: usize, seed: RngSeed) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 folds, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::InvalidParam(format!(
            "{k} folds requested for {} rows",
            labels.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut position = 0usize;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut seed.rng(Purpose::Folds, class as u64));
        for idx in members {
            folds[position % k].push(idx);
            position += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

pub fn stratified_folds(dataset: &Dataset, k: usize, seed: RngSeed) -> Result<Vec<Vec<usize>>> {
    let labels: Vec<usize> = dataset
        .rows
        .iter()
        .map(|r| dataset.class_index(r.label).expect("label in class set"))
        .collect();
    stratified_fold_indices(&labels, dataset.class_set.len(), k, seed)
}

/// Where oversampling happens relative to fold construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    /// Balance the whole dataset, then cross-validate on the balanced rows.
    /// Synthetic neighbours of test rows end up in training folds.
    PaperFaithful,
    /// Carve folds from the original rows and oversample training folds only.
    #[default]
    LeakageSafe,
}

impl fmt::Display for CvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvMode::PaperFaithful => "paper_faithful",
            CvMode::LeakageSafe => "leakage_safe",
        })
    }
}

impl std::str::FromStr for CvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper_faithful" => Ok(CvMode::PaperFaithful),
            "leakage_safe" => Ok(CvMode::LeakageSafe),
            other => Err(Error::InvalidParam(format!(
                "unknown mode `{other}` (paper_faithful | leakage_safe)"
            ))),
        }
    }
}

/// Learner, optional ensemble wrapper and optional SMOTE balancing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub learner: Learner,
    pub ensemble: EnsembleMethod,
    pub smote: Option<SmoteParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub synthetic_test_rows: usize,
    pub accuracy: f64,
    pub macro_precision: Score,
    pub macro_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_precision: Score,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion_matrix: ConfusionMatrix,
    pub mode: CvMode,
    pub seed: RngSeed,
    pub k_folds: usize,
    pub pipeline: Pipeline,
    pub fold_reports: Vec<FoldReport>,
}

struct FoldOutcome {
    cm: ConfusionMatrix,
    report: FoldReport,
}

fn run_fold(
    pipeline: &Pipeline,
    data: &Dataset,
    folds: &[Vec<usize>],
    fold: usize,
    mode: CvMode,
    seed: RngSeed,
) -> Result<FoldOutcome> {
    let fold_seed = seed.derive(Purpose::Pipeline, 1 + fold as u64);
    let test = &folds[fold];
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(f, _)| f != fold)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    let mut train = Dataset::new(train_idx.iter().map(|&i| data.rows[i].clone()).collect());
    if let (CvMode::LeakageSafe, Some(smote)) = (mode, &pipeline.smote) {
        train = balance(&train, smote, fold_seed.derive(Purpose::Smote, 0))?;
    }
    let train_set = TrainSet::from_dataset_with_classes(&train, &data.class_set)?;
    let model = pipeline.ensemble.fit(&pipeline.learner, &train_set, fold_seed)?;
    let mut cm = ConfusionMatrix::new(data.class_set.clone());
    for &i in test {
        let row = &data.rows[i];
        let truth = data.class_index(row.label).expect("label in class set");
        cm.record(truth, model.predict_index(&row.values)?)?;
    }
    let m = metrics(&cm)?;
    Ok(FoldOutcome {
        report: FoldReport {
            fold,
            train_rows: train.len(),
            test_rows: test.len(),
            synthetic_test_rows: test.iter().filter(|&&i| data.rows[i].synthetic).count(),
            accuracy: m.accuracy,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
        },
        cm,
    })
}

/// k-fold cross-validation of `pipeline`; test-fold predictions are pooled
/// into one confusion matrix. Folds run in parallel but every fold draws
/// from its own derived seed, so the report is schedule-independent.
pub fn cross_validate(
    pipeline: &Pipeline,
    dataset: &Dataset,
    k: usize,
    seed: RngSeed,
    mode: CvMode,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("cannot cross-validate an empty dataset"));
    }
    let balanced;
    let data = match (mode, &pipeline.smote) {
        (CvMode::PaperFaithful, Some(smote)) => {
            balanced = balance(dataset, smote, seed.derive(Purpose::Smote, 0))?;
            &balanced
        }
        _ => dataset,
    };
    let folds = stratified_folds(data, k, seed)?;
    let outcomes = (0..k)
        .into_par_iter()
        .map(|f| run_fold(pipeline, data, &folds, f, mode, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = ConfusionMatrix::new(data.class_set.clone());
    let mut fold_reports = Vec::with_capacity(k);
    for outcome in outcomes {
        pooled.merge(&outcome.cm);
        fold_reports.push(outcome.report);
    }
    let m = metrics(&pooled)?;
    Ok(EvalReport {
        accuracy: m.accuracy,
        macro_precision: m.macro_precision,
        macro_recall: m.macro_recall,
        per_class: m.per_class,
        confusion_matrix: pooled,
        mode,
        seed,
        k_folds: k,
        pipeline: *pipeline,
        fold_reports,
    })
}
