use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, init_params_with, AdamConfig, AdamState, EncoderParams, GradSet, ParamBuffers};
use crate::{rng, Error, Matrix, Result};

/// Encoder plus a decoder whose layer sizes mirror the encoder's in reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    pub encoder: EncoderParams,
    pub decoder: EncoderParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderGrads {
    pub encoder: GradSet,
    pub decoder: GradSet,
}

impl AutoencoderParams {
    /// Random encoder with sizes `layer_sizes` and mirrored decoder.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        let encoder = init_params_with(layer_sizes, &mut r)?;
        let mirrored: Vec<usize> = layer_sizes.iter().rev().copied().collect();
        let decoder = init_params_with(&mirrored, &mut r)?;
        Ok(Self { encoder, decoder })
    }

    pub fn new(encoder: EncoderParams, decoder: EncoderParams) -> Result<Self> {
        if decoder.input_dim() != encoder.output_dim() || decoder.output_dim() != encoder.input_dim() {
            return Err(Error::dim(
                "decoder shape",
                format!("{} -> {}", encoder.output_dim(), encoder.input_dim()),
                format!("{} -> {}", decoder.input_dim(), decoder.output_dim()),
            ));
        }
        Ok(Self { encoder, decoder })
    }

    pub fn reconstruct(&self, batch: &Matrix) -> Result<Matrix> {
        self.decoder.forward(&self.encoder.forward(batch)?)
    }

    /// Reconstruction MSE of `batch` and its gradients.
    pub fn loss_and_grads(&self, batch: &Matrix) -> Result<(f64, AutoencoderGrads)> {
        let enc = self.encoder.forward_trace(batch)?;
        let dec = self.decoder.forward_trace(&enc.output)?;
        let (loss, dout) = mse_loss(&dec.output, batch)?;
        let (dgrads, dcode) = self.decoder.backward_trace(&dec, &dout)?;
        let (egrads, _) = self.encoder.backward_trace(&enc, &dcode)?;
        Ok((
            loss,
            AutoencoderGrads {
                encoder: egrads,
                decoder: dgrads,
            },
        ))
    }
}

fn prefixed<'a>(prefix: &str, v: Vec<(String, &'a [f64])>) -> Vec<(String, &'a [f64])> {
    v.into_iter().map(|(n, b)| (format!("{prefix}.{n}"), b)).collect()
}

fn prefixed_mut<'a>(prefix: &str, v: Vec<(String, &'a mut [f64])>) -> Vec<(String, &'a mut [f64])> {
    v.into_iter().map(|(n, b)| (format!("{prefix}.{n}"), b)).collect()
}

impl ParamBuffers for AutoencoderParams {
    fn buffers(&self) -> Vec<(String, &[f64])> {
        let mut v = prefixed("encoder", self.encoder.buffers());
        v.extend(prefixed("decoder", self.decoder.buffers()));
        v
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut v = prefixed_mut("encoder", self.encoder.buffers_mut());
        v.extend(prefixed_mut("decoder", self.decoder.buffers_mut()));
        v
    }
}

impl ParamBuffers for AutoencoderGrads {
    fn buffers(&self) -> Vec<(String, &[f64])> {
        let mut v = prefixed("encoder", self.encoder.buffers());
        v.extend(prefixed("decoder", self.decoder.buffers()));
        v
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut v = prefixed_mut("encoder", self.encoder.buffers_mut());
        v.extend(prefixed_mut("decoder", self.decoder.buffers_mut()));
        v
    }
}

/// Mean squared error over all entries and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.dim() != target.dim() {
        return Err(Error::dim(
            "mse_loss",
            format!("{:?}", target.dim()),
            format!("{:?}", pred.dim()),
        ));
    }
    let count = pred.len().max(1) as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
    Ok((loss, diff * (2.0 / count)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for AutoencoderTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            adam: AdamConfig::default(),
        }
    }
}

/// Mini-batch Adam on reconstruction MSE. Returns the mean loss per epoch.
pub fn train_autoencoder(
    params: &mut AutoencoderParams,
    data: &Matrix,
    cfg: &AutoencoderTrainConfig,
    rng: &mut rng::Rng,
) -> Result<Vec<f64>> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let n = data.nrows();
    let mut state = AdamState::new(cfg.adam, params);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.select(ndarray::Axis(0), chunk);
            let (loss, grads) = params.loss_and_grads(&batch)?;
            adam_step(params, &grads, &mut state)?;
            total += loss;
            batches += 1;
        }
        history.push(total / batches.max(1) as f64);
    }
    Ok(history)
}
