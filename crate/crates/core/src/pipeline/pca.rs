use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Matrix, Result};

/// Projection of the centered rows onto the two leading principal axes.
///
/// Axes are ordered by decreasing variance and oriented so that each
/// axis's largest-magnitude loading is positive. With a single input
/// column the second coordinate is zero.
pub fn pca_project(features: &Matrix) -> Result<Matrix> {
    let (n, d) = features.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two rows".into()));
    }
    let mean = features.mean_axis(ndarray::Axis(0)).expect("nonempty");
    let centered = features - &mean;
    let c = DMatrix::from_fn(n, d, |i, j| centered[[i, j]]);
    let cov = c.transpose() * &c / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut out = Matrix::zeros((n, 2));
    for (k, &axis) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(axis);
        let mut pivot = 0;
        for j in 1..d {
            if v[j].abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[[i, k]] = sign * (0..d).map(|j| centered[[i, j]] * v[j]).sum::<f64>();
        }
    }
    Ok(out)
}
