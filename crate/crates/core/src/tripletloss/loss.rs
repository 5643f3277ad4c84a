use super::{ClassWeights, Triplet};
use crate::{Error, Matrix, Result};

fn sq_dist(e: &Matrix, i: usize, j: usize) -> f64 {
    e.row(i)
        .iter()
        .zip(e.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn check(embeddings: &Matrix, triplets: &[Triplet]) -> Result<()> {
    let m = embeddings.nrows();
    if let Some(t) = triplets
        .iter()
        .find(|t| t.anchor >= m || t.positive >= m || t.negative >= m)
    {
        return Err(Error::InvalidArgument(format!(
            "triplet {t:?} indexes outside a batch of {m} rows"
        )));
    }
    Ok(())
}

/// Sum over triplets of `[ weight * (d2(a,p) - d2(a,n) + margin) ]_+`, with
/// the gradient with respect to every embedding row.
fn hinge_sum(
    embeddings: &Matrix,
    triplets: &[Triplet],
    margin: f64,
    weight_of: impl Fn(&Triplet) -> f64,
) -> (f64, Matrix) {
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(embeddings.raw_dim());
    for t in triplets {
        let w = weight_of(t);
        let value = (sq_dist(embeddings, t.anchor, t.positive)
            - sq_dist(embeddings, t.anchor, t.negative)
            + margin)
            * w;
        if value <= 0.0 {
            continue;
        }
        loss += value;
        let a = embeddings.row(t.anchor).to_owned();
        let p = embeddings.row(t.positive).to_owned();
        let n = embeddings.row(t.negative).to_owned();
        // d/da = 2(n - p), d/dp = 2(p - a), d/dn = 2(a - n)
        let mut ga = grad.row_mut(t.anchor);
        ga.scaled_add(2.0 * w, &(&n - &p));
        let mut gp = grad.row_mut(t.positive);
        gp.scaled_add(2.0 * w, &(&p - &a));
        let mut gn = grad.row_mut(t.negative);
        gn.scaled_add(2.0 * w, &(&a - &n));
    }
    (loss, grad)
}

/// Plain triplet objective summed over `triplets`.
///
/// Triplets already satisfying the margin contribute neither loss nor gradient.
pub fn triplet_loss(embeddings: &Matrix, triplets: &[Triplet], margin: f64) -> Result<(f64, Matrix)> {
    check(embeddings, triplets)?;
    Ok(hinge_sum(embeddings, triplets, margin, |_| 1.0))
}

/// Triplet objective with each term scaled by the weight of its anchor's class.
///
/// `labels` holds the class of every batch row.
pub fn weighted_triplet_loss(
    embeddings: &Matrix,
    triplets: &[Triplet],
    margin: f64,
    weights: &ClassWeights,
    labels: &[usize],
) -> Result<(f64, Matrix)> {
    check(embeddings, triplets)?;
    if labels.len() != embeddings.nrows() {
        return Err(Error::dim("weighted_triplet_loss labels", embeddings.nrows(), labels.len()));
    }
    Ok(hinge_sum(embeddings, triplets, margin, |t| {
        weights.get(labels[t.anchor])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tripletloss::class_weights;
    use ndarray::array;

    fn t(a: usize, p: usize, n: usize) -> Triplet {
        Triplet {
            anchor: a,
            positive: p,
            negative: n,
        }
    }

    #[test]
    fn satisfied_constraint_is_zero() {
        let e = array![[0.0], [0.0], [2.0]];
        let (l, g) = triplet_loss(&e, &[t(0, 1, 2)], 1.0).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_evaluated_hinge() {
        // [1 - 1 + 1]_+ = 1
        let e = array![[0.0], [1.0], [1.0]];
        assert_eq!(triplet_loss(&e, &[t(0, 1, 2)], 1.0).unwrap().0, 1.0);
    }

    #[test]
    fn collapsed_points_cost_margin_each() {
        let e = array![[0.3, 0.3], [0.3, 0.3], [0.3, 0.3]];
        let ts = [t(0, 1, 2), t(1, 0, 2)];
        assert_eq!(triplet_loss(&e, &ts, 0.7).unwrap().0, 1.4);
    }

    #[test]
    fn minority_anchor_weight() {
        // anchor class 0 has weight 0.8 under counts (10, 40); hinge value 1
        let w = class_weights(&[10, 40]).unwrap();
        let e = array![[0.0], [1.0], [1.0]];
        let (l, _) = weighted_triplet_loss(&e, &[t(0, 1, 2)], 1.0, &w, &[0, 0, 1]).unwrap();
        assert!((l - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weighted_zero_when_satisfied() {
        let w = class_weights(&[3, 90]).unwrap();
        let e = array![[0.0], [0.1], [5.0]];
        let (l, g) = weighted_triplet_loss(&e, &[t(0, 1, 2)], 1.0, &w, &[0, 0, 1]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_range_triplet_fails() {
        let e = array![[0.0], [1.0]];
        assert!(triplet_loss(&e, &[t(0, 1, 2)], 1.0).is_err());
    }

    #[test]
    fn embedding_gradient_matches_finite_differences() {
        let e = array![[0.2, -0.4], [0.5, 0.1], [0.9, -0.3], [-0.6, 0.8], [0.0, 0.3]];
        let labels = [0, 0, 1, 1, 0];
        let ts = [t(0, 1, 2), t(1, 4, 3), t(4, 0, 2), t(2, 3, 1), t(3, 2, 4)];
        let w = class_weights(&[3, 2]).unwrap();
        let (_, g) = weighted_triplet_loss(&e, &ts, 1.5, &w, &labels).unwrap();
        let h = 1e-5;
        for i in 0..e.nrows() {
            for j in 0..e.ncols() {
                let mut ep = e.clone();
                ep[[i, j]] += h;
                let up = weighted_triplet_loss(&ep, &ts, 1.5, &w, &labels).unwrap().0;
                ep[[i, j]] -= 2.0 * h;
                let dn = weighted_triplet_loss(&ep, &ts, 1.5, &w, &labels).unwrap().0;
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - g[[i, j]]).abs() < 1e-8, "({i},{j}) fd {fd} vs {}", g[[i, j]]);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn loss_nonnegative_and_zero_iff_satisfied(
                pts in prop::collection::vec(-2.0f64..2.0, 6),
                margin in 0.1f64..2.0,
            ) {
                let e = Matrix::from_shape_vec((3, 2), pts).unwrap();
                let (l, _) = triplet_loss(&e, &[t(0, 1, 2)], margin).unwrap();
                prop_assert!(l >= 0.0);
                let dap = sq_dist(&e, 0, 1);
                let dan = sq_dist(&e, 0, 2);
                prop_assert_eq!(l == 0.0, dap + margin <= dan);
            }
        }
    }
}
