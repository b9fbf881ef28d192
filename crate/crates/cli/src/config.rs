//! Pipeline configuration and its flat `key = value` file form.

use std::fmt;
use std::str::FromStr;

use scenic_core::ensemble::{BagParams, BoostMode, BoostParams, EnsembleMethod};
use scenic_core::eval::{CvMode, Pipeline};
use scenic_core::sampling::{BalanceTarget, SmoteParams};
use scenic_core::trees::{ForestParams, Pruning, SplitCriterion, TreeParams};
use scenic_core::{Learner, N_FEATURES};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    J48,
    RepTree,
    Rf,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::J48, LearnerKind::RepTree, LearnerKind::Rf];

    /// Name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            LearnerKind::J48 => "J48",
            LearnerKind::RepTree => "REPTree",
            LearnerKind::Rf => "RF",
        }
    }

    fn base_tree(self) -> TreeParams {
        match self {
            LearnerKind::J48 => TreeParams::j48(),
            LearnerKind::RepTree => TreeParams::reptree(),
            LearnerKind::Rf => TreeParams::unpruned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleChoice {
    None,
    Bagging,
    Boosting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruningChoice {
    None,
    Pessimistic,
    ReducedError,
}

/// A value that may defer to the learner's own default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting<T> {
    Default,
    Value(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub radius_m: f64,
    pub drop_empty: bool,
    /// `None` disables oversampling.
    pub smote: Option<BalanceTarget>,
    pub smote_k: usize,
    pub learner: LearnerKind,
    pub criterion: Setting<SplitCriterion>,
    pub min_leaf: Setting<f64>,
    /// `Value(None)` means unlimited depth.
    pub max_depth: Setting<Option<usize>>,
    pub pruning: Setting<PruningChoice>,
    pub confidence: f64,
    pub holdout_fraction: f64,
    pub n_trees: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub ensemble: EnsembleChoice,
    pub iterations: usize,
    pub boost_mode: BoostMode,
    pub k_folds: usize,
    pub mode: CvMode,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let forest = ForestParams::default();
        PipelineConfig {
            radius_m: 100.0,
            drop_empty: false,
            smote: Some(BalanceTarget::Majority),
            smote_k: SmoteParams::default().k_neighbors,
            learner: LearnerKind::Rf,
            criterion: Setting::Default,
            min_leaf: Setting::Default,
            max_depth: Setting::Default,
            pruning: Setting::Default,
            confidence: 0.25,
            holdout_fraction: 1.0 / 3.0,
            n_trees: forest.n_trees,
            features_per_split: forest.features_per_split,
            bootstrap: forest.bootstrap,
            ensemble: EnsembleChoice::Bagging,
            iterations: BagParams::default().iterations,
            boost_mode: BoostMode::Reweight,
            k_folds: 10,
            mode: CvMode::LeakageSafe,
            seed: 1,
        }
    }
}

/// Every key of the file form, in the order it is written.
pub const KEYS: [&str; 20] = [
    "radius_m",
    "drop_empty",
    "smote",
    "smote_k",
    "learner",
    "criterion",
    "min_leaf",
    "max_depth",
    "pruning",
    "confidence",
    "holdout_fraction",
    "n_trees",
    "features_per_split",
    "bootstrap",
    "ensemble",
    "iterations",
    "boost_mode",
    "k_folds",
    "mode",
    "seed",
];

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Usage(format!("invalid value `{value}` for {key} (expected {expected})"))
}

fn number<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, expected))
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    number::<f64>(key, value, "a number").and_then(|v| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(key, value, "a finite number"))
        }
    })
}

fn setting<T>(value: &str, parse: impl FnOnce(&str) -> Result<T, CliError>) -> Result<Setting<T>, CliError> {
    if value == "default" {
        Ok(Setting::Default)
    } else {
        parse(value).map(Setting::Value)
    }
}

impl PipelineConfig {
    /// Current value of `key` in file form.
    pub fn get(&self, key: &str) -> Option<String> {
        fn show<T>(s: &Setting<T>, f: impl Fn(&T) -> String) -> String {
            match s {
                Setting::Default => "default".into(),
                Setting::Value(v) => f(v),
            }
        }
        Some(match key {
            "radius_m" => self.radius_m.to_string(),
            "drop_empty" => self.drop_empty.to_string(),
            "smote" => self.smote.map_or("none".into(), |t| t.to_string()),
            "smote_k" => self.smote_k.to_string(),
            "learner" => self.learner.to_string(),
            "criterion" => show(&self.criterion, |c| {
                match c {
                    SplitCriterion::GainRatio => "gain_ratio",
                    SplitCriterion::InfoGain => "info_gain",
                }
                .into()
            }),
            "min_leaf" => show(&self.min_leaf, f64::to_string),
            "max_depth" => show(&self.max_depth, |d| d.map_or("unlimited".into(), |d| d.to_string())),
            "pruning" => show(&self.pruning, |p| {
                match p {
                    PruningChoice::None => "none",
                    PruningChoice::Pessimistic => "pessimistic",
                    PruningChoice::ReducedError => "reduced_error",
                }
                .into()
            }),
            "confidence" => self.confidence.to_string(),
            "holdout_fraction" => self.holdout_fraction.to_string(),
            "n_trees" => self.n_trees.to_string(),
            "features_per_split" => self.features_per_split.to_string(),
            "bootstrap" => self.bootstrap.to_string(),
            "ensemble" => match self.ensemble {
                EnsembleChoice::None => "none",
                EnsembleChoice::Bagging => "bagging",
                EnsembleChoice::Boosting => "boosting",
            }
            .into(),
            "iterations" => self.iterations.to_string(),
            "boost_mode" => match self.boost_mode {
                BoostMode::Reweight => "reweight",
                BoostMode::Resample => "resample",
            }
            .into(),
            "k_folds" => self.k_folds.to_string(),
            "mode" => self.mode.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Sets `key` from its file-form text. Range checks happen in [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "radius_m" => self.radius_m = real(key, value)?,
            "drop_empty" => self.drop_empty = number(key, value, "true or false")?,
            "smote" => {
                self.smote = match value {
                    "none" => None,
                    other => Some(
                        other
                            .parse()
                            .map_err(|_| bad(key, value, "none | majority | count:N | percent:P"))?,
                    ),
                }
            }
            "smote_k" => self.smote_k = number(key, value, "a count")?,
            "learner" => self.learner = value.parse()?,
            "criterion" => {
                self.criterion = setting(value, |v| match v {
                    "gain_ratio" => Ok(SplitCriterion::GainRatio),
                    "info_gain" => Ok(SplitCriterion::InfoGain),
                    _ => Err(bad(key, v, "default | gain_ratio | info_gain")),
                })?
            }
            "min_leaf" => self.min_leaf = setting(value, |v| real(key, v))?,
            "max_depth" => {
                self.max_depth = setting(value, |v| match v {
                    "unlimited" => Ok(None),
                    n => number(key, n, "default | unlimited | N").map(Some),
                })?
            }
            "pruning" => {
                self.pruning = setting(value, |v| match v {
                    "none" => Ok(PruningChoice::None),
                    "pessimistic" => Ok(PruningChoice::Pessimistic),
                    "reduced_error" => Ok(PruningChoice::ReducedError),
                    _ => Err(bad(key, v, "default | none | pessimistic | reduced_error")),
                })?
            }
            "confidence" => self.confidence = real(key, value)?,
            "holdout_fraction" => self.holdout_fraction = real(key, value)?,
            "n_trees" => self.n_trees = number(key, value, "a count")?,
            "features_per_split" => self.features_per_split = number(key, value, "a count")?,
            "bootstrap" => self.bootstrap = number(key, value, "true or false")?,
            "ensemble" => {
                self.ensemble = match value {
                    "none" => EnsembleChoice::None,
                    "bagging" => EnsembleChoice::Bagging,
                    "boosting" => EnsembleChoice::Boosting,
                    _ => return Err(bad(key, value, "none | bagging | boosting")),
                }
            }
            "iterations" => self.iterations = number(key, value, "a count")?,
            "boost_mode" => {
                self.boost_mode = match value {
                    "reweight" => BoostMode::Reweight,
                    "resample" => BoostMode::Resample,
                    _ => return Err(bad(key, value, "reweight | resample")),
                }
            }
            "k_folds" => self.k_folds = number(key, value, "a count")?,
            "mode" => {
                self.mode = value
                    .parse()
                    .map_err(|_| bad(key, value, "paper_faithful | leakage_safe"))?
            }
            "seed" => self.seed = number(key, value, "an unsigned 64-bit integer")?,
            _ => return Err(CliError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Parses the file form on top of the defaults. Text after `#` is a
    /// comment, blank lines are skipped, and each key may appear once.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = PipelineConfig::default();
        let mut seen = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if key == "threads" {
                return Err(CliError::Usage(format!(
                    "config line {}: threads is a command-line flag only",
                    n + 1
                )));
            }
            if seen.contains(&key) {
                return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", n + 1)));
            }
            seen.push(key);
            config
                .set(key, value)
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(config)
    }

    /// File form with every key, parseable back into an equal config.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .filter_map(|k| self.get(k).map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    pub fn tree_params(&self) -> TreeParams {
        let mut tree = self.learner.base_tree();
        if let Setting::Value(c) = self.criterion {
            tree.criterion = c;
        }
        if let Setting::Value(m) = self.min_leaf {
            tree.min_leaf = m;
        }
        if let Setting::Value(d) = self.max_depth {
            tree.max_depth = d;
        }
        let pruning = match self.pruning {
            Setting::Value(p) => p,
            Setting::Default => match tree.pruning {
                Pruning::None => PruningChoice::None,
                Pruning::Pessimistic { .. } => PruningChoice::Pessimistic,
                Pruning::ReducedError { .. } => PruningChoice::ReducedError,
            },
        };
        tree.pruning = match pruning {
            PruningChoice::None => Pruning::None,
            PruningChoice::Pessimistic => Pruning::Pessimistic {
                confidence: self.confidence,
            },
            PruningChoice::ReducedError => Pruning::ReducedError {
                holdout_fraction: self.holdout_fraction,
            },
        };
        tree
    }

    pub fn learner(&self) -> Learner {
        let tree = self.tree_params();
        match self.learner {
            LearnerKind::J48 | LearnerKind::RepTree => Learner::Tree(tree),
            LearnerKind::Rf => Learner::Forest {
                forest: ForestParams {
                    n_trees: self.n_trees,
                    features_per_split: self.features_per_split,
                    bootstrap: self.bootstrap,
                },
                tree,
            },
        }
    }

    pub fn ensemble(&self) -> EnsembleMethod {
        match self.ensemble {
            EnsembleChoice::None => EnsembleMethod::None,
            EnsembleChoice::Bagging => EnsembleMethod::Bagging(BagParams {
                iterations: self.iterations,
                resample: true,
            }),
            EnsembleChoice::Boosting => EnsembleMethod::Boosting(BoostParams {
                iterations: self.iterations,
                mode: self.boost_mode,
            }),
        }
    }

    pub fn smote_params(&self) -> Option<SmoteParams> {
        self.smote.map(|target| SmoteParams {
            k_neighbors: self.smote_k,
            target,
        })
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline {
            learner: self.learner(),
            ensemble: self.ensemble(),
            smote: self.smote_params(),
        }
    }

    /// Table row name, e.g. `Bagging with RF`.
    pub fn classifier_name(&self) -> String {
        let base = self.learner.display_name();
        match self.ensemble {
            EnsembleChoice::None => base.to_string(),
            EnsembleChoice::Bagging => format!("Bagging with {base}"),
            EnsembleChoice::Boosting => format!("Boosting with {base}"),
        }
    }

    /// Rejects settings no component would accept.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.radius_m.is_nan() || self.radius_m <= 0.0 {
            return usage(format!("radius_m must be positive, got {}", self.radius_m));
        }
        if self.smote_k == 0 {
            return usage("smote_k must be at least 1".into());
        }
        if self.n_trees == 0 {
            return usage("n_trees must be at least 1".into());
        }
        if !(1..=N_FEATURES).contains(&self.features_per_split) {
            return usage(format!("features_per_split must be in 1..={N_FEATURES}"));
        }
        if self.iterations == 0 {
            return usage("iterations must be at least 1".into());
        }
        if self.k_folds < 2 {
            return usage("k_folds must be at least 2".into());
        }
        self.tree_params()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::J48 => "j48",
            LearnerKind::RepTree => "reptree",
            LearnerKind::Rf => "rf",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "j48" => Ok(LearnerKind::J48),
            "reptree" => Ok(LearnerKind::RepTree),
            "rf" => Ok(LearnerKind::Rf),
            other => Err(bad("learner", other, "j48 | reptree | rf")),
        }
    }
}
