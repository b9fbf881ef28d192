//! Trained-model wrapper, learner choices and the JSON model format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleModel;
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::rng::RngSeed;
use crate::trees::{train_forest, train_tree, ForestParams, Sample, TrainSet, TreeModel, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: ClassLabel,
    /// Leaf class frequencies for trees, weighted vote shares for ensembles.
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Tree(TreeModel),
    Ensemble(EnsembleModel),
}

impl Model {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Ensemble(e) => e.predict(x),
        }
    }

    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        match self {
            Model::Tree(t) => t.predict_index(x),
            Model::Ensemble(e) => e.predict_index(x),
        }
    }

    pub fn classes(&self) -> &[ClassLabel] {
        match self {
            Model::Tree(t) => &t.classes,
            Model::Ensemble(e) => &e.classes,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Tree(t) => t.n_features,
            Model::Ensemble(e) => e.n_features,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Model::Tree(t) => TreeModel::from_nodes(t.n_features, t.classes.clone(), t.nodes().to_vec()).map(drop),
            Model::Ensemble(e) => e.validate(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// Writes `model` as a versioned JSON document.
pub fn save_model<W: Write>(model: &Model, out: W) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn load_model<R: Read>(mut input: R) -> Result<Model> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let probe: VersionProbe = serde_json::from_str(&text)?;
    if probe.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelVersion(probe.format_version));
    }
    let file: ModelFile = serde_json::from_str(&text)?;
    file.model.validate()?;
    Ok(file.model)
}

/// A base learner: a single tree or a random forest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum Learner {
    Tree(TreeParams),
    Forest { forest: ForestParams, tree: TreeParams },
}

impl Learner {
    pub fn j48() -> Self {
        Learner::Tree(TreeParams::j48())
    }

    pub fn reptree() -> Self {
        Learner::Tree(TreeParams::reptree())
    }

    pub fn random_forest() -> Self {
        Learner::Forest {
            forest: ForestParams::default(),
            tree: TreeParams::unpruned(),
        }
    }

    pub fn fit(&self, data: &TrainSet, sample: &Sample, seed: RngSeed) -> Result<Model> {
        match self {
            Learner::Tree(params) => train_tree(data, sample, params, seed).map(Model::Tree),
            Learner::Forest { forest, tree } => train_forest(data, sample, forest, tree, seed).map(Model::Ensemble),
        }
    }
}
