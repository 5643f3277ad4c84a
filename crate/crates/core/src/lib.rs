//! Representation learning for multi-class imbalanced tabular data.
//!
//! A small feedforward encoder is trained under imbalance-weighted triplet
//! losses or safe-neighborhood losses. Downstream classifiers (1-NN, LDA,
//! CART) are then fitted on the learned embedding and compared against
//! classical resampling baselines under stratified cross-validation.

pub mod classeval;
pub mod dataio;
pub mod error;
pub mod neighborloss;
pub mod netcore;
pub mod pipeline;
pub mod resample;
pub mod rng;
pub mod synth;
pub mod tripletloss;

pub use error::{Error, Result};

/// Row-major real matrix used for features and embeddings.
pub type Matrix = ndarray::Array2<f64>;
