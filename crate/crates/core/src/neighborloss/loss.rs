use super::{cutoff_weight, dynamic_alpha, safeness_weight, NeighborLossConfig, NeighborhoodBatch, SafeVariant};
use crate::{Error, Matrix, Result};

fn check(embeddings: &Matrix, batch: &NeighborhoodBatch) -> Result<()> {
    if embeddings.nrows() != batch.members.len() {
        return Err(Error::dim("batch embeddings", batch.members.len(), embeddings.nrows()));
    }
    Ok(())
}

/// Euclidean distance between batch rows `i` and `j`.
fn dist(e: &Matrix, i: usize, j: usize) -> f64 {
    e.row(i)
        .iter()
        .zip(e.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Adds `scale * dD(i,j)` to the gradient rows of `i` and `j`. D is not
/// differentiable at 0; the zero subgradient is used there.
fn add_dist_grad(grad: &mut Matrix, e: &Matrix, i: usize, j: usize, d: f64, scale: f64) {
    if d == 0.0 || scale == 0.0 {
        return;
    }
    let diff = &e.row(i) - &e.row(j);
    grad.row_mut(i).scaled_add(scale / d, &diff);
    grad.row_mut(j).scaled_add(-scale / d, &diff);
}

/// Sum over anchors of the selected neighborhood loss, and its gradient
/// with respect to every row of `embeddings` (rows ordered as
/// `batch.members`). `labels` are training-set labels.
///
/// Per anchor `x` with margin `a`:
/// * basic: `sum_same D + sum_diff max(a - D, 0)`
/// * safe weights: basic times the safeness weight
/// * cutoff: basic times the clipped safeness weight
/// * mean distances: `(mean_same D + mean_diff max(a - D, 0))` times the
///   safeness weight, an empty group contributing 0.
pub fn safe_loss(
    embeddings: &Matrix,
    batch: &NeighborhoodBatch,
    labels: &[usize],
    cfg: &NeighborLossConfig,
) -> Result<(f64, Matrix)> {
    check(embeddings, batch)?;
    let mut total = 0.0;
    let mut grad = Matrix::zeros(embeddings.raw_dim());
    for (pos, &anchor) in batch.anchors.iter().enumerate() {
        let ra = batch.row_of(anchor).expect("anchor is a member");
        let y = labels[anchor];
        let alpha = dynamic_alpha(batch, pos, labels);
        let neighbors = &batch.neighbors[pos];
        let n_same = neighbors.iter().filter(|&&j| labels[j] == y).count();
        let n_diff = neighbors.len() - n_same;
        let w = safeness_weight(batch, pos, labels);
        let (scale, same_scale, diff_scale) = match cfg.variant {
            SafeVariant::Basic => (1.0, 1.0, 1.0),
            SafeVariant::SafeWeights => (w, 1.0, 1.0),
            SafeVariant::Cutoff => (cutoff_weight(w, cfg.cutoff_threshold), 1.0, 1.0),
            SafeVariant::MeanDists => (
                w,
                1.0 / n_same.max(1) as f64,
                1.0 / n_diff.max(1) as f64,
            ),
        };
        for &j in neighbors {
            let rj = batch.row_of(j).expect("neighbor is a member");
            let d = dist(embeddings, ra, rj);
            if labels[j] == y {
                total += scale * same_scale * d;
                add_dist_grad(&mut grad, embeddings, ra, rj, d, scale * same_scale);
            } else if alpha - d > 0.0 {
                total += scale * diff_scale * (alpha - d);
                add_dist_grad(&mut grad, embeddings, ra, rj, d, -scale * diff_scale);
            }
        }
    }
    Ok((total, grad))
}

/// For every (anchor, other-class neighbor) pair in batch order, whether
/// its hinge is active, followed by whether each same-class distance is
/// nonzero. Finite-difference checks skip perturbations that change this.
pub fn active_hinges(embeddings: &Matrix, batch: &NeighborhoodBatch, labels: &[usize]) -> Vec<bool> {
    let mut out = Vec::new();
    for (pos, &anchor) in batch.anchors.iter().enumerate() {
        let ra = batch.row_of(anchor).expect("anchor is a member");
        let alpha = dynamic_alpha(batch, pos, labels);
        for &j in &batch.neighbors[pos] {
            let d = dist(embeddings, ra, batch.row_of(j).expect("neighbor is a member"));
            out.push(if labels[j] == labels[anchor] { d > 0.0 } else { alpha - d > 0.0 });
        }
    }
    out
}
