use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{Dense, EncoderParams};
use crate::{Error, Matrix, Result};

/// On-disk layout: layer sizes, row-major weights per layer, biases, slopes.
///
/// Floats are written in shortest round-trip form and parsed with exact
/// rounding, so a save/load cycle reproduces every bit.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderDoc {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    slopes: Vec<f64>,
}

impl EncoderParams {
    pub fn to_json(&self) -> Result<String> {
        let doc = EncoderDoc {
            layer_sizes: self.layer_sizes(),
            weights: self.layers.iter().map(|l| l.weight.iter().copied().collect()).collect(),
            biases: self.layers.iter().map(|l| l.bias.to_vec()).collect(),
            slopes: self.slopes.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EncoderDoc = serde_json::from_str(text)?;
        let n = doc.layer_sizes.len();
        if n < 2 || doc.weights.len() != n - 1 || doc.biases.len() != n - 1 {
            return Err(Error::InvalidArgument(
                "encoder document: layer count does not match layer_sizes".into(),
            ));
        }
        let layers = doc
            .layer_sizes
            .windows(2)
            .zip(doc.weights)
            .zip(doc.biases)
            .map(|((w, weight), bias)| {
                let weight = Matrix::from_shape_vec((w[1], w[0]), weight).map_err(|_| {
                    Error::InvalidArgument(format!("weight block is not {}x{}", w[1], w[0]))
                })?;
                Ok(Dense {
                    weight,
                    bias: Array1::from(bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EncoderParams::new(layers, doc.slopes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{init_params, ParamBuffers};

    #[test]
    fn bit_exact_round_trip() {
        let mut p = init_params(&[7, 5, 4, 3], 99).unwrap();
        p.slopes = vec![0.1 + 0.2, std::f64::consts::PI / 7.0];
        p.layers[0].bias[0] = 1e-300;
        p.layers[1].bias[1] = -2.0_f64.powi(-1074);
        let back = EncoderParams::from_json(&p.to_json().unwrap()).unwrap();
        for ((_, a), (_, b)) in p.buffers().iter().zip(back.buffers().iter()) {
            let ab: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn rejects_inconsistent_document() {
        let bad = r#"{"layer_sizes":[2,1],"weights":[[1.0]],"biases":[[0.0]],"slopes":[]}"#;
        assert!(EncoderParams::from_json(bad).is_err());
        let extra = r#"{"layer_sizes":[1,1],"weights":[[1.0]],"biases":[[0.0]],"slopes":[],"x":1}"#;
        assert!(EncoderParams::from_json(extra).is_err());
    }
}
