use serde::{Deserialize, Serialize};

use super::{knn_batch_from_embeddings, nearest_neighbors, safe_loss, NeighborLossConfig};
use crate::dataio::Dataset;
use crate::netcore::{
    adam_step, train_autoencoder, AdamConfig, AdamState, AutoencoderParams, AutoencoderTrainConfig,
    EncoderParams, NetConfig,
};
use crate::{rng, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeTrainConfig {
    pub net: NetConfig,
    pub neighbor: NeighborLossConfig,
    pub autoencoder: AutoencoderTrainConfig,
    /// Passes of neighborhood training; each takes `ceil(n / batch_anchors)`
    /// steps.
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for SafeTrainConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            neighbor: NeighborLossConfig::default(),
            autoencoder: AutoencoderTrainConfig::default(),
            epochs: 200,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// Encoder half of an autoencoder trained on reconstruction error.
pub fn pretrain_encoder(
    dataset: &Dataset,
    net: &NetConfig,
    cfg: &AutoencoderTrainConfig,
    seed: u64,
) -> Result<EncoderParams> {
    let sizes = net.layer_sizes(dataset.n_features());
    let mut ae = AutoencoderParams::init(&sizes, rng::derive_seed(seed, &[0]))?;
    let mut r = rng::seeded(rng::derive_seed(seed, &[1]));
    train_autoencoder(&mut ae, dataset.features(), cfg, &mut r)?;
    Ok(ae.encoder)
}

/// Autoencoder warm start followed by neighborhood-loss training of the
/// encoder.
pub fn train_safe_encoder(dataset: &Dataset, cfg: &SafeTrainConfig) -> Result<EncoderParams> {
    let encoder = pretrain_encoder(dataset, &cfg.net, &cfg.autoencoder, cfg.seed)?;
    let mut r = rng::seeded(rng::derive_seed(cfg.seed, &[2]));
    Ok(train_safe_encoder_from(encoder, dataset, cfg, &mut r)?.0)
}

/// Neighborhood-loss training starting from `encoder`. Neighbor sets are
/// recomputed from the current encoder before every step. Returns the
/// trained encoder and the summed loss of each pass.
pub fn train_safe_encoder_from(
    mut encoder: EncoderParams,
    dataset: &Dataset,
    cfg: &SafeTrainConfig,
    rng: &mut rng::Rng,
) -> Result<(EncoderParams, Vec<f64>)> {
    cfg.neighbor.validate()?;
    let steps = dataset.n_rows().div_ceil(cfg.neighbor.batch_anchors);
    let labels = dataset.labels();
    let mut state = AdamState::new(cfg.adam, &encoder);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..steps {
            let all = encoder.forward(dataset.features())?;
            let batch = knn_batch_from_embeddings(&all, &cfg.neighbor, rng)?;
            let trace = encoder.forward_trace(&batch.select_members(dataset.features()))?;
            let (loss, grad) = safe_loss(&trace.output, &batch, labels, &cfg.neighbor)?;
            let (grads, _) = encoder.backward_trace(&trace, &grad)?;
            adam_step(&mut encoder, &grads, &mut state)?;
            epoch_loss += loss;
        }
        history.push(epoch_loss);
    }
    Ok((encoder, history))
}

/// Mean over `rows` of the fraction of each row's `k` nearest neighbors in
/// `embeddings` sharing its label.
pub fn mean_same_class_ratio(embeddings: &Matrix, labels: &[usize], k: usize, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let total: f64 = rows
        .iter()
        .map(|&i| {
            let (nb, _) = nearest_neighbors(embeddings, i, k);
            nb.iter().filter(|&&j| labels[j] == labels[i]).count() as f64 / nb.len().max(1) as f64
        })
        .sum();
    total / rows.len() as f64
}
