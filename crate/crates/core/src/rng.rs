//! Seeding conventions.
//!
//! Every random draw comes from ChaCha8, which produces the same stream on
//! every platform. Independent consumers (one SMOTE class, one fold shuffle,
//! one holdout split) each get their own ChaCha stream of the same key so
//! that results do not depend on execution order or thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

/// Stream namespaces; the low 32 bits carry a per-purpose index.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Purpose {
    Smote = 1,
    Folds = 2,
    Holdout = 3,
    Bootstrap = 4,
    FeatureSubset = 5,
    Boosting = 6,
    Members = 7,
    Pipeline = 8,
}

impl RngSeed {
    /// `seed + offset`, wrapping. Used for per-tree, per-member and per-fold seeds.
    pub fn offset(self, offset: u64) -> RngSeed {
        RngSeed(self.0.wrapping_add(offset))
    }

    /// A child seed drawn from this seed's stream for `(purpose, index)`.
    pub fn derive(self, purpose: Purpose, index: u64) -> RngSeed {
        RngSeed(self.rng(purpose, index).next_u64())
    }

    pub fn rng(self, purpose: Purpose, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(((purpose as u64) << 32) | (index & 0xffff_ffff));
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}
