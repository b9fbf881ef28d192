//! Bagging and AdaBoost.M1 over any base [`Learner`].

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::model::{Learner, Model, Prediction};
use crate::rng::{Purpose, RngSeed};
use crate::trees::{argmax, Sample, TrainSet};

pub const DEFAULT_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Bagging,
    Boosting,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub model: Model,
    pub weight: f64,
}

/// Weighted list of member models combined by weighted plurality vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    pub seed: RngSeed,
    pub n_features: usize,
    pub classes: Vec<ClassLabel>,
    pub members: Vec<Member>,
}

impl EnsembleModel {
    /// Summed member weight per class.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Arity {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut votes = vec![0.0; self.classes.len()];
        for m in &self.members {
            votes[m.model.predict_index(x)?] += m.weight;
        }
        Ok(votes)
    }

    /// Ties resolve toward the lower rating.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.votes(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let votes = self.votes(x)?;
        let class_index = argmax(&votes);
        let total: f64 = votes.iter().sum();
        let distribution = if total > 0.0 {
            votes.iter().map(|v| v / total).collect()
        } else {
            vec![1.0 / votes.len() as f64; votes.len()]
        };
        Ok(Prediction {
            class_index,
            label: self.classes[class_index],
            distribution,
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::InvalidParam("ensemble has no members".into()));
        }
        for m in &self.members {
            if !(m.weight.is_finite() && m.weight >= 0.0) {
                return Err(Error::InvalidParam(format!("bad member weight {}", m.weight)));
            }
            if m.model.classes() != self.classes.as_slice() || m.model.n_features() != self.n_features {
                return Err(Error::InvalidParam("member shape differs from ensemble".into()));
            }
        }
        if self.kind == EnsembleKind::Bagging && self.members.iter().any(|m| m.weight != 1.0) {
            return Err(Error::InvalidParam("bagging members must have weight 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagParams {
    pub iterations: usize,
    /// When false every member sees the full training set unchanged.
    pub resample: bool,
}

impl Default for BagParams {
    fn default() -> Self {
        BagParams {
            iterations: DEFAULT_ITERATIONS,
            resample: true,
        }
    }
}

fn bootstrap(n: usize, rng: &mut impl Rng) -> Sample {
    Sample::unit((0..n).map(|_| rng.gen_range(0..n)).collect())
}

/// Bootstrap aggregation: `iterations` members on seeded bootstrap
/// resamples, combined by unweighted majority vote.
pub fn bag(base: &Learner, data: &TrainSet, params: &BagParams, seed: RngSeed) -> Result<EnsembleModel> {
    if data.is_empty() {
        return Err(Error::Empty("cannot bag on an empty dataset"));
    }
    if params.iterations == 0 {
        return Err(Error::InvalidParam("bagging needs at least one iteration".into()));
    }
    let members = (0..params.iterations)
        .into_par_iter()
        .map(|i| {
            let member_seed = seed.derive(Purpose::Members, i as u64);
            let sample = if params.resample {
                bootstrap(data.len(), &mut member_seed.rng(Purpose::Bootstrap, u64::MAX))
            } else {
                Sample::uniform(data.len())
            };
            Ok(Member {
                model: base.fit(data, &sample, member_seed)?,
                weight: 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        kind: EnsembleKind::Bagging,
        seed,
        n_features: data.n_features(),
        classes: data.classes().to_vec(),
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoostMode {
    /// Pass row weights to the learner directly.
    #[default]
    Reweight,
    /// Train on a weighted bootstrap draw with unit weights.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoostParams {
    pub iterations: usize,
    pub mode: BoostMode,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            iterations: DEFAULT_ITERATIONS,
            mode: BoostMode::Reweight,
        }
    }
}

/// Per-round bookkeeping from [`boost_traced`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostTrace {
    /// Weighted training error of every trained round, kept or not.
    pub errors: Vec<f64>,
    /// Row-weight sum after each renormalization.
    pub weight_sums: Vec<f64>,
    /// Rounds thrown away because their error reached 0.5.
    pub discarded: usize,
    /// True when a round fit the training set perfectly.
    pub stopped_early: bool,
}

/// Vote weight of a member with weighted error `error`: `ln((1 - e) / e)`.
pub fn member_weight(error: f64) -> f64 {
    ((1.0 - error) / error).ln()
}

/// AdaBoost.M1. See [`boost_traced`].
pub fn boost(base: &Learner, data: &TrainSet, params: &BoostParams, seed: RngSeed) -> Result<EnsembleModel> {
    boost_traced(base, data, params, seed).map(|(model, _)| model)
}

/// AdaBoost.M1 with a trace of per-round errors and weight sums.
///
/// A round with error >= 0.5 is discarded and the row weights reset to
/// uniform; after `iterations` discards training stops with the members
/// collected so far. A perfect round is kept with the weight for error
/// `1 / (2n)` and ends training. If no round is ever kept, the first
/// trained model becomes the sole member with weight 1.
pub fn boost_traced(
    base: &Learner,
    data: &TrainSet,
    params: &BoostParams,
    seed: RngSeed,
) -> Result<(EnsembleModel, BoostTrace)> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Empty("cannot boost on an empty dataset"));
    }
    if params.iterations == 0 {
        return Err(Error::InvalidParam("boosting needs at least one iteration".into()));
    }
    let uniform = 1.0 / n as f64;
    let mut weights = vec![uniform; n];
    let mut members = Vec::new();
    let mut fallback = None;
    let mut trace = BoostTrace::default();
    let mut round = 0u64;
    while members.len() < params.iterations {
        let round_seed = seed.derive(Purpose::Boosting, round);
        round += 1;
        let sample = match params.mode {
            BoostMode::Reweight => Sample {
                rows: (0..n).collect(),
                // Mean weight 1 keeps min_leaf meaningful.
                weights: weights.iter().map(|w| w * n as f64).collect(),
            },
            BoostMode::Resample => {
                let dist =
                    WeightedIndex::new(&weights).map_err(|e| Error::InvalidParam(format!("boosting weights: {e}")))?;
                let mut rng = round_seed.rng(Purpose::Bootstrap, 0);
                Sample::unit((0..n).map(|_| dist.sample(&mut rng)).collect())
            }
        };
        let model = base.fit(data, &sample, round_seed)?;
        let mut missed = Vec::new();
        for i in 0..n {
            if model.predict_index(data.row(i))? != data.label(i) {
                missed.push(i);
            }
        }
        let error: f64 = missed.iter().map(|&i| weights[i]).sum();
        trace.errors.push(error);
        if error >= 0.5 {
            fallback.get_or_insert(model);
            trace.discarded += 1;
            if trace.discarded > params.iterations {
                break;
            }
            weights.fill(uniform);
            continue;
        }
        if missed.is_empty() {
            members.push(Member {
                model,
                weight: member_weight(1.0 / (2.0 * n as f64)),
            });
            trace.stopped_early = true;
            break;
        }
        let beta = (1.0 - error) / error;
        members.push(Member {
            model,
            weight: beta.ln(),
        });
        for &i in &missed {
            weights[i] *= beta;
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        trace.weight_sums.push(weights.iter().sum());
    }
    if members.is_empty() {
        let model = fallback.expect("at least one round was trained");
        members.push(Member { model, weight: 1.0 });
    }
    let ensemble = EnsembleModel {
        kind: EnsembleKind::Boosting,
        seed,
        n_features: data.n_features(),
        classes: data.classes().to_vec(),
        members,
    };
    Ok((ensemble, trace))
}

/// Optional ensemble wrapper around a base learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EnsembleMethod {
    #[default]
    None,
    Bagging(BagParams),
    Boosting(BoostParams),
}

impl EnsembleMethod {
    /// Trains `base`, wrapped as configured, on all of `data`.
    pub fn fit(&self, base: &Learner, data: &TrainSet, seed: RngSeed) -> Result<Model> {
        match self {
            EnsembleMethod::None => base.fit(data, &Sample::uniform(data.len()), seed),
            EnsembleMethod::Bagging(p) => bag(base, data, p, seed).map(Model::Ensemble),
            EnsembleMethod::Boosting(p) => boost(base, data, p, seed).map(Model::Ensemble),
        }
    }
}
