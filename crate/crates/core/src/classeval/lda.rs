use nalgebra::{DMatrix, DVector};

use crate::dataio::Dataset;
use crate::{Error, Matrix, Result};

/// Linear discriminant with a pooled, ridge-regularized covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLda {
    pub class_means: Matrix,
    pub pooled_covariance_inverse: Matrix,
    /// `-inf` for classes without training rows, which are never predicted.
    pub log_priors: Vec<f64>,
    coef: Matrix,
    intercept: Vec<f64>,
}

/// Fits class means, empirical priors and the within-class covariance
/// `S / (n - C)` plus `lambda I`, `lambda = 1e-6 trace / d`.
pub fn lda_fit(train: &Dataset) -> Result<FittedLda> {
    let n = train.n_rows();
    let d = train.n_features();
    let k = train.n_classes();
    let present = train.n_present_classes();
    if present < 2 {
        return Err(Error::InvalidArgument("LDA needs at least two classes".into()));
    }
    if n <= present {
        return Err(Error::InvalidArgument(format!(
            "LDA needs more rows ({n}) than classes ({present})"
        )));
    }
    let x = train.features();
    let counts = train.class_counts();
    let mut means = Matrix::zeros((k, d));
    for (i, &y) in train.labels().iter().enumerate() {
        means.row_mut(y).scaled_add(1.0, &x.row(i));
    }
    for (mut row, &m) in means.rows_mut().into_iter().zip(counts) {
        if m > 0 {
            row.mapv_inplace(|v| v / m as f64);
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (i, &y) in train.labels().iter().enumerate() {
        let r = DVector::from_fn(d, |j, _| x[[i, j]] - means[[y, j]]);
        cov += &r * r.transpose();
    }
    cov /= (n - present) as f64;
    let trace = cov.trace();
    let lambda = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    for j in 0..d {
        cov[(j, j)] += lambda;
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("regularized covariance is not positive definite".into()))?;
    let inv = chol.inverse();
    let mut coef = Matrix::zeros((k, d));
    let mut intercept = vec![f64::NEG_INFINITY; k];
    let mut log_priors = vec![f64::NEG_INFINITY; k];
    for c in (0..k).filter(|&c| counts[c] > 0) {
        let mu = DVector::from_fn(d, |j, _| means[[c, j]]);
        let w = &inv * &mu;
        for j in 0..d {
            coef[[c, j]] = w[j];
        }
        log_priors[c] = (counts[c] as f64 / n as f64).ln();
        intercept[c] = -0.5 * mu.dot(&w) + log_priors[c];
    }
    Ok(FittedLda {
        class_means: means,
        pooled_covariance_inverse: Matrix::from_shape_fn((d, d), |(i, j)| inv[(i, j)]),
        log_priors,
        coef,
        intercept,
    })
}

/// Class maximizing `x' S^-1 mu_c - mu_c' S^-1 mu_c / 2 + log prior_c`;
/// ties go to the smaller class id.
pub fn lda_predict(model: &FittedLda, features: &Matrix) -> Result<Vec<usize>> {
    if features.ncols() != model.coef.ncols() {
        return Err(Error::dim("LDA features", model.coef.ncols(), features.ncols()));
    }
    let scores = features.dot(&model.coef.t());
    Ok(scores
        .rows()
        .into_iter()
        .map(|s| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (c, (&v, &b)) in s.iter().zip(&model.intercept).enumerate() {
                let score = v + b;
                if score > best_score {
                    best = c;
                    best_score = score;
                }
            }
            best
        })
        .collect())
}
