//! Synthetic benchmark data.

use rand_distr::{Distribution, StandardNormal};

use crate::dataio::{Dataset, RawDataset};
use crate::{rng, Matrix, Result};

/// Isotropic Gaussian classes: `counts[c]` rows drawn around `means[c]` with
/// per-coordinate standard deviation `std`. Rows are grouped by class.
pub fn gaussian_mixture(means: &[Vec<f64>], counts: &[usize], std: f64, seed: u64) -> Result<Dataset> {
    assert_eq!(means.len(), counts.len(), "one mean per class");
    let dim = means.first().map_or(0, Vec::len);
    let n: usize = counts.iter().sum();
    let mut r = rng::seeded(seed);
    let mut features = Matrix::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, (mean, &count)) in means.iter().zip(counts).enumerate() {
        assert_eq!(mean.len(), dim, "means must share a dimension");
        for _ in 0..count {
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut r);
                features[[row, j]] = mean[j] + std * z;
            }
            labels.push(c);
            row += 1;
        }
    }
    let names = (0..counts.len()).map(|c| format!("c{c}")).collect();
    Dataset::new(features, labels, names)
}

/// Unit-variance classes whose means sit `separation` apart along the first
/// axis.
pub fn gaussian_classes(counts: &[usize], dim: usize, separation: f64, seed: u64) -> Dataset {
    let means: Vec<Vec<f64>> = (0..counts.len())
        .map(|c| {
            let mut m = vec![0.0; dim];
            m[0] = c as f64 * separation;
            m
        })
        .collect();
    gaussian_mixture(&means, counts, 1.0, seed).expect("valid synthetic dataset")
}

/// Raw table view of a dataset, with columns `x0, x1, ...`.
pub fn to_raw(dataset: &Dataset) -> Result<RawDataset> {
    let names: Vec<String> = (0..dataset.n_features()).map(|j| format!("x{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let values: Vec<Vec<f64>> = dataset.features().rows().into_iter().map(|r| r.to_vec()).collect();
    let labels: Vec<&str> = dataset.labels().iter().map(|&y| dataset.class_name(y)).collect();
    RawDataset::from_numeric(&name_refs, &values, &labels)
}

/// The complete balance-scale table: every combination of left weight,
/// left distance, right weight and right distance in 1..=5, labelled by the
/// side the scale tips to (`L`, `R`) or `B` when balanced.
pub fn balance_scale() -> RawDataset {
    let mut values = Vec::with_capacity(625);
    let mut labels = Vec::with_capacity(625);
    for lw in 1..=5i32 {
        for ld in 1..=5 {
            for rw in 1..=5 {
                for rd in 1..=5 {
                    let torque = lw * ld - rw * rd;
                    labels.push(match torque.signum() {
                        1 => "L",
                        -1 => "R",
                        _ => "B",
                    });
                    values.push(vec![lw as f64, ld as f64, rw as f64, rd as f64]);
                }
            }
        }
    }
    RawDataset::from_numeric(
        &["left_weight", "left_distance", "right_weight", "right_distance"],
        &values,
        &labels,
    )
    .expect("valid balance-scale table")
}
