use serde::{Deserialize, Serialize};

use super::ParamBuffers;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Moment estimates for every parameter buffer, in [`ParamBuffers`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments shaped like `params`.
    pub fn new<P: ParamBuffers>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .buffers()
            .iter()
            .map(|(_, b)| vec![0.0; b.len()])
            .collect();
        Self {
            config,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }
}

/// One bias-corrected Adam update, in place.
///
/// Gradients are checked for finiteness before any parameter is touched, so
/// a failed step leaves `params` and `state` unchanged.
pub fn adam_step<P, G>(params: &mut P, grads: &G, state: &mut AdamState) -> Result<()>
where
    P: ParamBuffers,
    G: ParamBuffers,
{
    let gbufs = grads.buffers();
    let mut pbufs = params.buffers_mut();
    if gbufs.len() != pbufs.len() || state.first_moment.len() != pbufs.len() {
        return Err(Error::dim("adam buffers", pbufs.len(), gbufs.len()));
    }
    for ((pname, p), ((_, g), m)) in pbufs
        .iter()
        .zip(gbufs.iter().zip(&state.first_moment))
    {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::dim("adam buffer length", p.len(), g.len()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                param: pname.clone(),
            });
        }
    }

    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (k, (_, p)) in pbufs.iter_mut().enumerate() {
        let g = gbufs[k].1;
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{init_params, Dense, EncoderParams};
    use ndarray::array;

    fn scalar_net(w: f64) -> EncoderParams {
        EncoderParams::new(
            vec![Dense {
                weight: array![[w]],
                bias: array![0.0],
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_net(0.0);
        let mut g = p.zero_grads();
        g.weights[0][[0, 0]] = 1.0;
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut p, &g, &mut st).unwrap();
        let w = p.layers[0].weight[[0, 0]];
        assert!((w + 0.001).abs() < 1e-6, "w = {w}");
        assert_eq!(st.step, 1);
        // zero bias gradient leaves the bias alone
        assert_eq!(p.layers[0].bias[0], 0.0);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = init_params(&[3, 4, 2, 2], 5).unwrap();
        let before = p.clone();
        let g = p.zero_grads();
        let mut st = AdamState::new(AdamConfig::default(), &p);
        for _ in 0..3 {
            adam_step(&mut p, &g, &mut st).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn deterministic() {
        let p0 = init_params(&[3, 4, 2, 2], 5).unwrap();
        let mut g = p0.zero_grads();
        g.weights[1].fill(0.3);
        g.slopes[0] = -0.2;
        let s0 = AdamState::new(AdamConfig::default(), &p0);
        let (mut pa, mut sa) = (p0.clone(), s0.clone());
        let (mut pb, mut sb) = (p0, s0);
        adam_step(&mut pa, &g, &mut sa).unwrap();
        adam_step(&mut pb, &g, &mut sb).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(sa, sb);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = init_params(&[2, 2, 2, 2], 0).unwrap();
        let before = p.clone();
        let mut g = p.zero_grads();
        g.biases[1][0] = f64::NAN;
        let mut st = AdamState::new(AdamConfig::default(), &p);
        match adam_step(&mut p, &g, &mut st) {
            Err(Error::NonFiniteGradient { param }) => assert_eq!(param, "layer2.bias"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p, before);
        assert_eq!(st.step, 0);
    }
}
