use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_tree_with, FeatureSampler, Sample, TrainSet, TreeParams};
use crate::ensemble::{EnsembleKind, EnsembleModel, Member};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::{Purpose, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features drawn without replacement at every node.
    pub features_per_split: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    /// `floor(log2(n_features) + 1)`; 4 for the eleven location features.
    pub fn default_features_per_split(n_features: usize) -> usize {
        ((n_features.max(1) as f64).log2() + 1.0) as usize
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            features_per_split: Self::default_features_per_split(crate::features::N_FEATURES),
            bootstrap: true,
        }
    }
}

/// Trains a random forest. Tree `i` uses seed `seed + i`, so the result does
/// not depend on how trees are scheduled across threads.
pub fn train_forest(
    data: &TrainSet,
    sample: &Sample,
    params: &ForestParams,
    tree_params: &TreeParams,
    seed: RngSeed,
) -> Result<EnsembleModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParam("forest needs at least one tree".into()));
    }
    if params.features_per_split == 0 || params.features_per_split > data.n_features().max(1) {
        return Err(Error::InvalidParam(format!(
            "features_per_split must be in 1..={}",
            data.n_features()
        )));
    }
    if sample.is_empty() {
        return Err(Error::Empty("cannot train a forest on an empty dataset"));
    }
    let trees: Vec<Member> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let tree_seed = seed.offset(i as u64);
            let drawn;
            let tree_sample = if params.bootstrap {
                let mut rng = tree_seed.rng(Purpose::Bootstrap, 0);
                let positions: Vec<usize> = (0..sample.len()).map(|_| rng.gen_range(0..sample.len())).collect();
                drawn = Sample {
                    rows: positions.iter().map(|&p| sample.rows[p]).collect(),
                    weights: positions.iter().map(|&p| sample.weights[p]).collect(),
                };
                &drawn
            } else {
                sample
            };
            let sampler = (params.features_per_split < data.n_features()).then(|| FeatureSampler {
                per_split: params.features_per_split,
                rng: tree_seed.rng(Purpose::FeatureSubset, 0),
            });
            let tree = train_tree_with(data, tree_sample, tree_params, tree_seed, sampler)?;
            Ok(Member {
                model: Model::Tree(tree),
                weight: 1.0,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleModel {
        kind: EnsembleKind::Forest,
        seed,
        n_features: data.n_features(),
        classes: data.classes().to_vec(),
        members: trees,
    })
}
