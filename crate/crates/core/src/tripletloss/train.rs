use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    class_weights, mine_triplets, pairwise_sq_dists, triplet_loss, weighted_triplet_loss,
    ClassWeights, TripletConfig,
};
use crate::dataio::Dataset;
use crate::netcore::{adam_step, init_params_with, AdamConfig, AdamState, EncoderParams, NetConfig};
use crate::{rng, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletTrainConfig {
    pub net: NetConfig,
    pub triplet: TripletConfig,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TripletTrainConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            triplet: TripletConfig::default(),
            epochs: 200,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// Splits row indices into class-stratified mini-batches.
///
/// Each class's shuffled members are dealt round-robin over
/// `ceil(n / batch_size)` batches, the dealing position carrying over between
/// classes. A batch that still ends up with a single class (possible when all
/// but one class are tiny) is topped up with one random row of another
/// class, so every batch can yield triplets.
pub fn stratified_batches(labels: &[usize], batch_size: usize, rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let n = labels.len();
    if n == 0 || batch_size == 0 {
        return Vec::new();
    }
    let n_batches = n.div_ceil(batch_size);
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        per_class[y].push(i);
    }
    let mut batches: Vec<Vec<usize>> = vec![Vec::with_capacity(batch_size + 1); n_batches];
    let mut next = 0usize;
    for members in per_class.iter_mut() {
        members.shuffle(rng);
        for &i in members.iter() {
            batches[next].push(i);
            next = (next + 1) % n_batches;
        }
    }

    let present = per_class.iter().filter(|m| !m.is_empty()).count();
    if present >= 2 {
        for batch in batches.iter_mut() {
            let c = labels[batch[0]];
            if batch.iter().all(|&i| labels[i] == c) {
                let others: Vec<usize> = (0..n).filter(|&i| labels[i] != c).collect();
                batch.push(others[rng.random_range(0..others.len())]);
            }
        }
    }
    batches
}

/// Class weights over the classes present in `counts`; absent classes get 0.
fn present_class_weights(counts: &[usize]) -> Result<ClassWeights> {
    let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    let w = class_weights(&present)?;
    let mut it = w.as_slice().iter();
    Ok(ClassWeights(
        counts
            .iter()
            .map(|&c| if c > 0 { *it.next().unwrap() } else { 0.0 })
            .collect(),
    ))
}

/// Trains a freshly initialised encoder with online triplet mining.
pub fn train_triplet_encoder(
    dataset: &Dataset,
    cfg: &TripletTrainConfig,
    weighted: bool,
) -> Result<EncoderParams> {
    let mut init_rng = rng::seeded(rng::derive_seed(cfg.seed, &[0]));
    let params = init_params_with(&cfg.net.layer_sizes(dataset.n_features()), &mut init_rng)?;
    let mut train_rng = rng::seeded(rng::derive_seed(cfg.seed, &[1]));
    Ok(train_triplet_encoder_from(params, dataset, cfg, weighted, &mut train_rng)?.0)
}

/// Continues training `params`; returns the trained encoder and the summed
/// loss of every epoch.
pub fn train_triplet_encoder_from(
    mut params: EncoderParams,
    dataset: &Dataset,
    cfg: &TripletTrainConfig,
    weighted: bool,
    rng: &mut rng::Rng,
) -> Result<(EncoderParams, Vec<f64>)> {
    cfg.triplet.validate()?;
    let weights = present_class_weights(dataset.class_counts())?;
    let labels = dataset.labels();
    let mut state = AdamState::new(cfg.adam, &params);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        for batch in stratified_batches(labels, cfg.triplet.batch_size, rng) {
            let x = dataset.features().select(ndarray::Axis(0), &batch);
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let trace = params.forward_trace(&x)?;
            let triplets = mine_triplets(&trace.output, &batch_labels, &cfg.triplet, rng)?;
            if triplets.is_empty() {
                continue;
            }
            let (loss, grad) = if weighted {
                weighted_triplet_loss(&trace.output, &triplets, cfg.triplet.margin, &weights, &batch_labels)?
            } else {
                triplet_loss(&trace.output, &triplets, cfg.triplet.margin)?
            };
            let (grads, _) = params.backward_trace(&trace, &grad)?;
            adam_step(&mut params, &grads, &mut state)?;
            epoch_loss += loss;
        }
        history.push(epoch_loss);
    }
    Ok((params, history))
}

/// Fraction of in-batch triplets satisfying the strict margin constraint
/// `d2(a,p) + margin < d2(a,n)` under `params`.
///
/// Batches are formed as during training; every ordered (anchor, positive)
/// pair is combined with every negative of its batch.
pub fn constraint_satisfaction(
    params: &EncoderParams,
    dataset: &Dataset,
    cfg: &TripletConfig,
    rng: &mut rng::Rng,
) -> Result<f64> {
    let labels = dataset.labels();
    let (mut satisfied, mut total) = (0usize, 0usize);
    for batch in stratified_batches(labels, cfg.batch_size, rng) {
        let x = dataset.features().select(ndarray::Axis(0), &batch);
        let d = pairwise_sq_dists(&params.forward(&x)?);
        let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
        for a in 0..y.len() {
            for p in 0..y.len() {
                if p == a || y[p] != y[a] {
                    continue;
                }
                for n in 0..y.len() {
                    if y[n] == y[a] {
                        continue;
                    }
                    total += 1;
                    if d[[a, p]] + cfg.margin < d[[a, n]] {
                        satisfied += 1;
                    }
                }
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { satisfied as f64 / total as f64 })
}
