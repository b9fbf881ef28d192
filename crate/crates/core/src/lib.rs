//! Predicting the aesthetic-rating class of locations from the social
//! metadata (views, favorites, comments, owners) of nearby geo-tagged photos.
//!
//! The pipeline runs: [`ingest`] parses photo and location files and joins
//! them by great-circle radius; [`features`] aggregates eleven per-location
//! features; [`sampling`] balances classes with SMOTE; [`trees`] and
//! [`ensemble`] train decision trees, random forests, bagging and AdaBoost.M1;
//! [`eval`] cross-validates with stratified folds and reports accuracy and
//! macro precision/recall.

pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod label;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod trees;

pub use error::{Error, Result};
pub use features::{Dataset, FeatureVector, FEATURE_NAMES, N_FEATURES};
pub use label::ClassLabel;
pub use model::{Learner, Model, Prediction};
pub use rng::RngSeed;
