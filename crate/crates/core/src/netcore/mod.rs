//! Feedforward encoder with PReLU activations, autoencoder wrapper, MSE
//! loss, Adam, and a finite-difference gradient checker.
//!
//! Gradients are computed by hand-written reverse mode over the fixed
//! topology: affine layers with a learnable scalar PReLU slope between
//! consecutive layers and no activation after the last one.

mod adam;
mod autoencoder;
pub mod gradcheck;
mod serialize;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use autoencoder::{
    mse_loss, train_autoencoder, AutoencoderGrads, AutoencoderParams, AutoencoderTrainConfig,
};

use ndarray::{Array1, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Matrix, Result};

/// Initial PReLU slope at every activation site.
pub const INITIAL_SLOPE: f64 = 0.25;

/// Widths of the three-layer encoder: two hidden layers and the embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub hidden: [usize; 2],
    /// Defaults to the input dimension when absent.
    #[serde(default)]
    pub embedding_dim: Option<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: [64, 32],
            embedding_dim: None,
        }
    }
}

impl NetConfig {
    pub fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        vec![
            input_dim,
            self.hidden[0],
            self.hidden[1],
            self.embedding_dim.unwrap_or(input_dim),
        ]
    }
}

/// PReLU with a scalar slope. The derivative at zero is taken as 1.
#[inline]
pub fn prelu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
fn prelu_grad(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// One affine layer: `y = W x + b` with `W` of shape out × in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Parameters of the mapping `R^d_in -> R^d_out`: affine layers with one
/// PReLU slope per gap between consecutive layers.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub layers: Vec<Dense>,
    pub slopes: Vec<f64>,
}

/// Gradient buffers shaped like an [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Array1<f64>>,
    pub slopes: Vec<f64>,
}

/// Intermediate values of a forward pass needed by [`EncoderParams::backward_trace`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input of each layer (`inputs[0]` is the batch).
    inputs: Vec<Matrix>,
    /// Pre-activation of each hidden layer.
    pre_activations: Vec<Matrix>,
    pub output: Matrix,
}

/// Named flat views over parameter-shaped buffers, in a fixed order.
pub trait ParamBuffers {
    fn buffers(&self) -> Vec<(String, &[f64])>;
    fn buffers_mut(&mut self) -> Vec<(String, &mut [f64])>;
}

/// Glorot-uniform weights, zero biases, PReLU slopes at [`INITIAL_SLOPE`].
pub fn init_params(layer_sizes: &[usize], seed: u64) -> Result<EncoderParams> {
    let mut rng = rng::seeded(seed);
    init_params_with(layer_sizes, &mut rng)
}

pub fn init_params_with(layer_sizes: &[usize], rng: &mut rng::Rng) -> Result<EncoderParams> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArgument(
            "an encoder needs at least an input and an output size".into(),
        ));
    }
    if let Some(bad) = layer_sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("layer size {bad} is zero")));
    }
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight = Matrix::from_shape_simple_fn((fan_out, fan_in), || {
                rng.random_range(-bound..bound)
            });
            Dense {
                weight,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect::<Vec<_>>();
    let slopes = vec![INITIAL_SLOPE; layers.len() - 1];
    Ok(EncoderParams { layers, slopes })
}

impl EncoderParams {
    /// Builds parameters from explicit layers; slopes must number `layers - 1`.
    pub fn new(layers: Vec<Dense>, slopes: Vec<f64>) -> Result<Self> {
        let p = Self { layers, slopes };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidArgument("encoder has no layers".into()));
        }
        if self.slopes.len() + 1 != self.layers.len() {
            return Err(Error::dim(
                "PReLU slope count",
                self.layers.len() - 1,
                self.slopes.len(),
            ));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::dim("layer bias", l.output_dim(), l.bias.len()));
            }
            if i > 0 && self.layers[i - 1].output_dim() != l.input_dim() {
                return Err(Error::dim(
                    "layer chaining",
                    self.layers[i - 1].output_dim(),
                    l.input_dim(),
                ));
            }
        }
        let finite = self.layers.iter().all(|l| {
            l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        }) && self.slopes.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("encoder has non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::output_dim)
    }

    /// `[d_in, h_1, ..., d_out]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Dense::output_dim));
        s
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::dim("encoder input", self.input_dim(), batch.ncols()));
        }
        Ok(())
    }

    /// Maps each row of `batch` through the network.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward_trace(batch)?.output)
    }

    pub fn forward_trace(&self, batch: &Matrix) -> Result<ForwardTrace> {
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.slopes.len());
        let mut h = batch.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            inputs.push(h);
            if i < self.slopes.len() {
                let slope = self.slopes[i];
                h = z.mapv(|v| prelu(v, slope));
                pre_activations.push(z);
            } else {
                h = z;
            }
        }
        Ok(ForwardTrace {
            inputs,
            pre_activations,
            output: h,
        })
    }

    /// Gradients of a scalar objective whose gradient with respect to the
    /// network output is `upstream`.
    pub fn backward(&self, batch: &Matrix, upstream: &Matrix) -> Result<GradSet> {
        let trace = self.forward_trace(batch)?;
        Ok(self.backward_trace(&trace, upstream)?.0)
    }

    /// Reverse pass over a stored trace; also returns the gradient with
    /// respect to the network input.
    pub fn backward_trace(&self, trace: &ForwardTrace, upstream: &Matrix) -> Result<(GradSet, Matrix)> {
        if upstream.dim() != trace.output.dim() {
            return Err(Error::dim(
                "upstream gradient",
                format!("{:?}", trace.output.dim()),
                format!("{:?}", upstream.dim()),
            ));
        }
        let n_layers = self.layers.len();
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        let mut slopes = vec![0.0; self.slopes.len()];
        let mut g = upstream.clone();
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            // `dot` may return a column-major result for degenerate shapes
            weights.push(g.t().dot(&trace.inputs[l]).as_standard_layout().into_owned());
            biases.push(g.sum_axis(Axis(0)));
            let mut gin = g.dot(&layer.weight);
            if l > 0 {
                let z = &trace.pre_activations[l - 1];
                let slope = self.slopes[l - 1];
                let mut ds = 0.0;
                ndarray::Zip::from(&mut gin).and(z).for_each(|gv, &zv| {
                    if zv < 0.0 {
                        ds += *gv * zv;
                    }
                    *gv *= prelu_grad(zv, slope);
                });
                slopes[l - 1] = ds;
            }
            g = gin;
        }
        weights.reverse();
        biases.reverse();
        Ok((
            GradSet {
                weights,
                biases,
                slopes,
            },
            g,
        ))
    }

    /// Branch taken at every hidden unit for every row (`true` = linear
    /// branch). Finite-difference checks skip perturbations that change it.
    pub fn activation_pattern(&self, batch: &Matrix) -> Result<Vec<bool>> {
        let trace = self.forward_trace(batch)?;
        Ok(trace
            .pre_activations
            .iter()
            .flat_map(|z| z.iter().map(|&v| v >= 0.0).collect::<Vec<_>>())
            .collect())
    }

    pub fn zero_grads(&self) -> GradSet {
        GradSet {
            weights: self.layers.iter().map(|l| Matrix::zeros(l.weight.dim())).collect(),
            biases: self.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
            slopes: vec![0.0; self.slopes.len()],
        }
    }

    pub fn n_params(&self) -> usize {
        self.buffers().iter().map(|(_, b)| b.len()).sum()
    }
}

impl GradSet {
    pub fn is_zero(&self) -> bool {
        self.buffers().iter().all(|(_, b)| b.iter().all(|&v| v == 0.0))
    }

    /// Accumulates `other` into `self`.
    pub fn add_assign(&mut self, other: &GradSet) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
        for (a, b) in self.slopes.iter_mut().zip(&other.slopes) {
            *a += b;
        }
    }
}

fn layer_buffers<'a>(
    weights: impl Iterator<Item = &'a Matrix>,
    biases: impl Iterator<Item = &'a Array1<f64>>,
    slopes: &'a [f64],
) -> Vec<(String, &'a [f64])> {
    let mut out = Vec::new();
    for (i, (w, b)) in weights.zip(biases).enumerate() {
        out.push((
            format!("layer{}.weight", i + 1),
            w.as_slice().expect("standard layout"),
        ));
        out.push((
            format!("layer{}.bias", i + 1),
            b.as_slice().expect("standard layout"),
        ));
    }
    out.push(("prelu.slopes".to_string(), slopes));
    out
}

fn layer_buffers_mut<'a>(
    weights: impl Iterator<Item = &'a mut Matrix>,
    biases: impl Iterator<Item = &'a mut Array1<f64>>,
    slopes: &'a mut [f64],
) -> Vec<(String, &'a mut [f64])> {
    let mut out = Vec::new();
    for (i, (w, b)) in weights.zip(biases).enumerate() {
        out.push((
            format!("layer{}.weight", i + 1),
            w.as_slice_mut().expect("standard layout"),
        ));
        out.push((
            format!("layer{}.bias", i + 1),
            b.as_slice_mut().expect("standard layout"),
        ));
    }
    out.push(("prelu.slopes".to_string(), slopes));
    out
}

impl ParamBuffers for EncoderParams {
    fn buffers(&self) -> Vec<(String, &[f64])> {
        layer_buffers(
            self.layers.iter().map(|l| &l.weight),
            self.layers.iter().map(|l| &l.bias),
            &self.slopes,
        )
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let (weights, biases): (Vec<_>, Vec<_>) = self
            .layers
            .iter_mut()
            .map(|l| (&mut l.weight, &mut l.bias))
            .unzip();
        layer_buffers_mut(weights.into_iter(), biases.into_iter(), &mut self.slopes)
    }
}

impl ParamBuffers for GradSet {
    fn buffers(&self) -> Vec<(String, &[f64])> {
        layer_buffers(self.weights.iter(), self.biases.iter(), &self.slopes)
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut [f64])> {
        layer_buffers_mut(
            self.weights.iter_mut(),
            self.biases.iter_mut(),
            &mut self.slopes,
        )
    }
}
