//! Online triplet mining and the plain / imbalance-weighted triplet
//! objectives over squared Euclidean distances in embedding space.

mod loss;
mod mining;
mod train;

pub use loss::{triplet_loss, weighted_triplet_loss};
pub use mining::{mine_triplets, pairwise_sq_dists};
pub use train::{
    constraint_satisfaction, stratified_batches, train_triplet_encoder, train_triplet_encoder_from,
    TripletTrainConfig,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row indices into one mini-batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

impl Triplet {
    pub fn is_valid_for(&self, labels: &[usize]) -> bool {
        self.anchor != self.positive
            && labels[self.anchor] == labels[self.positive]
            && labels[self.anchor] != labels[self.negative]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningStrategy {
    /// Closest negative to the anchor.
    Hardest,
    /// Uniform among negatives violating the margin constraint.
    RandomHard,
    /// Uniform among negatives farther than the positive but inside the margin.
    SemiHard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TripletConfig {
    pub margin: f64,
    pub strategy: MiningStrategy,
    pub batch_size: usize,
}

impl Default for TripletConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            strategy: MiningStrategy::RandomHard,
            batch_size: 32,
        }
    }
}

impl TripletConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::Config(format!("triplet margin must be positive, got {}", self.margin)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("triplet batch_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Per-class anchor weights proportional to inverse class size, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `w[c] = (1/n_c) / sum_j (1/n_j)`.
///
/// Evaluated as `1 / sum_j (n_c / n_j)`, which is algebraically identical and
/// yields exactly `1/C` when all counts are equal.
pub fn class_weights(class_counts: &[usize]) -> Result<ClassWeights> {
    if class_counts.is_empty() {
        return Err(Error::InvalidArgument("no classes".into()));
    }
    if let Some(c) = class_counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidArgument(format!("class {c} has zero count")));
    }
    let w = class_counts
        .iter()
        .map(|&nc| {
            let s: f64 = class_counts.iter().map(|&nj| nc as f64 / nj as f64).sum();
            1.0 / s
        })
        .collect();
    Ok(ClassWeights(w))
}
