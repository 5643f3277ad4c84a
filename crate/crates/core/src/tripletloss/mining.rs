use rand::Rng as _;

use super::{MiningStrategy, Triplet, TripletConfig};
use crate::{rng::Rng, Error, Matrix, Result};

/// Squared Euclidean distance between every pair of rows.
pub fn pairwise_sq_dists(embeddings: &Matrix) -> Matrix {
    let m = embeddings.nrows();
    let mut d = Matrix::zeros((m, m));
    for i in 0..m {
        for j in (i + 1)..m {
            let v: f64 = embeddings
                .row(i)
                .iter()
                .zip(embeddings.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Selects one negative per ordered (anchor, positive) pair of the batch.
///
/// Pairs for which the strategy finds no candidate are skipped; a batch with
/// a single class yields no triplets.
pub fn mine_triplets(
    embeddings: &Matrix,
    labels: &[usize],
    cfg: &TripletConfig,
    rng: &mut Rng,
) -> Result<Vec<Triplet>> {
    let m = embeddings.nrows();
    if labels.len() != m {
        return Err(Error::dim("mine_triplets labels", m, labels.len()));
    }
    let alpha = cfg.margin;
    let d = pairwise_sq_dists(embeddings);
    let mut out = Vec::new();
    let mut candidates = Vec::with_capacity(m);
    for a in 0..m {
        let negatives: Vec<usize> = (0..m).filter(|&n| labels[n] != labels[a]).collect();
        if negatives.is_empty() {
            continue;
        }
        for p in 0..m {
            if p == a || labels[p] != labels[a] {
                continue;
            }
            let dap = d[[a, p]];
            let negative = match cfg.strategy {
                MiningStrategy::Hardest => {
                    // strict `<` keeps the smallest index on ties
                    let mut best = negatives[0];
                    for &n in &negatives[1..] {
                        if d[[a, n]] < d[[a, best]] {
                            best = n;
                        }
                    }
                    Some(best)
                }
                MiningStrategy::RandomHard | MiningStrategy::SemiHard => {
                    candidates.clear();
                    candidates.extend(negatives.iter().copied().filter(|&n| {
                        let dan = d[[a, n]];
                        let violates = dap - dan + alpha > 0.0;
                        match cfg.strategy {
                            MiningStrategy::SemiHard => violates && dan > dap,
                            _ => violates,
                        }
                    }));
                    if candidates.is_empty() {
                        None
                    } else {
                        Some(candidates[rng.random_range(0..candidates.len())])
                    }
                }
            };
            if let Some(negative) = negative {
                out.push(Triplet {
                    anchor: a,
                    positive: p,
                    negative,
                });
            }
        }
    }
    Ok(out)
}
