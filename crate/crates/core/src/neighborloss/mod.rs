//! Safe-neighborhood representation learning: kNN mini-batches built in the
//! current embedding space and four neighborhood losses over unsquared
//! Euclidean distances.
//!
//! Within one step the neighbor sets, the per-anchor margins and the
//! safeness weights are constants; gradients flow only through the
//! distances themselves.

mod loss;
mod train;

pub use loss::{active_hinges, safe_loss};
pub use train::{
    mean_same_class_ratio, pretrain_encoder, train_safe_encoder, train_safe_encoder_from,
    SafeTrainConfig,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::netcore::EncoderParams;
use crate::{rng, Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafeVariant {
    #[serde(rename = "safe_basic")]
    Basic,
    #[serde(rename = "safe_weights")]
    SafeWeights,
    #[serde(rename = "safe_cutoff")]
    Cutoff,
    #[serde(rename = "safe_mean_dists")]
    MeanDists,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborLossConfig {
    pub k: usize,
    pub batch_anchors: usize,
    pub variant: SafeVariant,
    pub cutoff_threshold: f64,
}

impl Default for NeighborLossConfig {
    fn default() -> Self {
        Self {
            k: 20,
            batch_anchors: 16,
            variant: SafeVariant::Basic,
            cutoff_threshold: 0.7,
        }
    }
}

impl NeighborLossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.batch_anchors == 0 {
            return Err(Error::Config("neighbor k and batch_anchors must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cutoff_threshold) {
            return Err(Error::Config(format!(
                "cutoff_threshold must lie in [0, 1], got {}",
                self.cutoff_threshold
            )));
        }
        Ok(())
    }
}

/// Sampled anchors with their k nearest neighbors, all as training-set row
/// indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodBatch {
    pub anchors: Vec<usize>,
    /// Per anchor, ascending by distance; ties by smaller index.
    pub neighbors: Vec<Vec<usize>>,
    /// Euclidean distances matching `neighbors`.
    pub distances: Vec<Vec<f64>>,
    /// Distinct training rows involved, ascending. Row `r` of the batch
    /// embedding matrix holds the embedding of `members[r]`.
    pub members: Vec<usize>,
    row_of: BTreeMap<usize, usize>,
}

impl NeighborhoodBatch {
    /// Assembles a batch from explicit neighbor lists.
    pub fn new(anchors: Vec<usize>, neighbors: Vec<Vec<usize>>, distances: Vec<Vec<f64>>) -> Result<Self> {
        if neighbors.len() != anchors.len() || distances.len() != anchors.len() {
            return Err(Error::dim("neighborhood lists", anchors.len(), neighbors.len()));
        }
        for (i, (nb, d)) in neighbors.iter().zip(&distances).enumerate() {
            if nb.len() != d.len() {
                return Err(Error::dim("neighbor distances", nb.len(), d.len()));
            }
            if nb.contains(&anchors[i]) {
                return Err(Error::InvalidArgument(format!(
                    "anchor {} listed as its own neighbor",
                    anchors[i]
                )));
            }
        }
        let mut members: Vec<usize> = anchors.iter().chain(neighbors.iter().flatten()).copied().collect();
        members.sort_unstable();
        members.dedup();
        let row_of = members.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        Ok(Self {
            anchors,
            neighbors,
            distances,
            members,
            row_of,
        })
    }

    /// Batch row holding training row `index`.
    pub fn row_of(&self, index: usize) -> Option<usize> {
        self.row_of.get(&index).copied()
    }

    /// Rows of a full training-set matrix belonging to `members`, in batch
    /// row order.
    pub fn select_members(&self, full: &Matrix) -> Matrix {
        full.select(ndarray::Axis(0), &self.members)
    }
}

/// Indices and distances of the `k` rows of `embeddings` nearest to row
/// `anchor`, excluding the anchor itself.
pub fn nearest_neighbors(embeddings: &Matrix, anchor: usize, k: usize) -> (Vec<usize>, Vec<f64>) {
    let a = embeddings.row(anchor);
    let mut cand: Vec<(f64, usize)> = (0..embeddings.nrows())
        .filter(|&j| j != anchor)
        .map(|j| {
            let d2: f64 = a
                .iter()
                .zip(embeddings.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            (d2, j)
        })
        .collect();
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    cand.truncate(k);
    cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).unzip()
}

/// Samples `batch_anchors` distinct anchors uniformly and finds each one's
/// k nearest neighbors among all training rows embedded by `encoder`.
pub fn build_knn_batch(
    encoder: &EncoderParams,
    dataset: &Dataset,
    cfg: &NeighborLossConfig,
    rng: &mut rng::Rng,
) -> Result<NeighborhoodBatch> {
    let embeddings = encoder.forward(dataset.features())?;
    knn_batch_from_embeddings(&embeddings, cfg, rng)
}

/// [`build_knn_batch`] on precomputed embeddings of the whole training set.
pub fn knn_batch_from_embeddings(
    embeddings: &Matrix,
    cfg: &NeighborLossConfig,
    rng: &mut rng::Rng,
) -> Result<NeighborhoodBatch> {
    cfg.validate()?;
    let n = embeddings.nrows();
    if n <= cfg.k {
        return Err(Error::InvalidArgument(format!(
            "{n} training rows cannot supply {} neighbors per anchor",
            cfg.k
        )));
    }
    let anchors = rand::seq::index::sample(rng, n, cfg.batch_anchors.min(n)).into_vec();
    let (neighbors, distances) = anchors
        .iter()
        .map(|&a| nearest_neighbors(embeddings, a, cfg.k))
        .unzip();
    NeighborhoodBatch::new(anchors, neighbors, distances)
}

fn same_class_distances<'a>(
    batch: &'a NeighborhoodBatch,
    anchor_pos: usize,
    labels: &'a [usize],
) -> impl Iterator<Item = f64> + 'a {
    let y = labels[batch.anchors[anchor_pos]];
    batch.neighbors[anchor_pos]
        .iter()
        .zip(&batch.distances[anchor_pos])
        .filter(move |(&j, _)| labels[j] == y)
        .map(|(_, &d)| d)
}

/// Margin for the anchor at position `anchor_pos`: one more than its
/// farthest same-class neighbor distance, or 1 with no same-class neighbor.
pub fn dynamic_alpha(batch: &NeighborhoodBatch, anchor_pos: usize, labels: &[usize]) -> f64 {
    same_class_distances(batch, anchor_pos, labels).fold(0.0, f64::max) + 1.0
}

/// `1 - (same-class neighbors) / k`: 0 in a pure neighborhood, 1 when
/// surrounded by other classes.
pub fn safeness_weight(batch: &NeighborhoodBatch, anchor_pos: usize, labels: &[usize]) -> f64 {
    let k = batch.neighbors[anchor_pos].len();
    if k == 0 {
        return 0.0;
    }
    let same = same_class_distances(batch, anchor_pos, labels).count();
    1.0 - same as f64 / k as f64
}

pub fn cutoff_weight(w: f64, threshold: f64) -> f64 {
    w.min(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn batch_with(labels_of_neighbors: &[usize], dists: &[f64]) -> (NeighborhoodBatch, Vec<usize>) {
        // anchor is row 0 with label 0; neighbors are rows 1..
        let mut labels = vec![0];
        labels.extend_from_slice(labels_of_neighbors);
        let nb: Vec<usize> = (1..=dists.len()).collect();
        let b = NeighborhoodBatch::new(vec![0], vec![nb], vec![dists.to_vec()]).unwrap();
        (b, labels)
    }

    #[test]
    fn alpha_is_farthest_same_class_plus_one() {
        let (b, y) = batch_with(&[0, 1, 0], &[0.2, 0.5, 0.7]);
        assert!((dynamic_alpha(&b, 0, &y) - 1.7).abs() < 1e-15);
        let (b, y) = batch_with(&[1, 1], &[0.2, 0.5]);
        assert_eq!(dynamic_alpha(&b, 0, &y), 1.0);
        let (b, y) = batch_with(&[0, 0], &[0.0, 0.0]);
        assert_eq!(dynamic_alpha(&b, 0, &y), 1.0);
    }

    #[test]
    fn safeness_and_cutoff() {
        let mut labels = vec![0; 5];
        labels.extend(vec![1; 15]);
        let (b, y) = batch_with(&labels, &[1.0; 20]);
        assert_eq!(safeness_weight(&b, 0, &y), 0.75);
        let (b, y) = batch_with(&[0, 0, 0], &[1.0; 3]);
        assert_eq!(safeness_weight(&b, 0, &y), 0.0);
        let (b, y) = batch_with(&[2, 1], &[1.0; 2]);
        assert_eq!(safeness_weight(&b, 0, &y), 1.0);
        assert_eq!(cutoff_weight(0.9, 0.7), 0.7);
        assert_eq!(cutoff_weight(0.3, 0.7), 0.3);
        assert_eq!(cutoff_weight(0.7, 0.7), 0.7);
    }

    #[test]
    fn forced_neighborhood_when_n_is_k_plus_one() {
        let e = array![[0.0], [1.0], [3.0], [7.0]];
        let cfg = NeighborLossConfig {
            k: 3,
            batch_anchors: 4,
            ..NeighborLossConfig::default()
        };
        let b = knn_batch_from_embeddings(&e, &cfg, &mut rng::seeded(0)).unwrap();
        for (a, nb) in b.anchors.iter().zip(&b.neighbors) {
            let mut s = nb.clone();
            s.sort();
            let expected: Vec<usize> = (0..4).filter(|j| j != a).collect();
            assert_eq!(s, expected);
        }
        assert_eq!(b.members, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicates_come_first() {
        let e = array![[0.0], [0.5], [0.0], [0.0], [2.0]];
        let (nb, d) = nearest_neighbors(&e, 0, 3);
        assert_eq!(nb, vec![2, 3, 1]);
        assert_eq!(d, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn too_few_rows_fails() {
        let e = array![[0.0], [1.0]];
        let cfg = NeighborLossConfig {
            k: 2,
            ..NeighborLossConfig::default()
        };
        assert!(knn_batch_from_embeddings(&e, &cfg, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn same_seed_same_batch() {
        let e = Matrix::from_shape_fn((30, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let cfg = NeighborLossConfig {
            k: 5,
            batch_anchors: 8,
            ..NeighborLossConfig::default()
        };
        let a = knn_batch_from_embeddings(&e, &cfg, &mut rng::seeded(3)).unwrap();
        let b = knn_batch_from_embeddings(&e, &cfg, &mut rng::seeded(3)).unwrap();
        assert_eq!(a, b);
        let mut anchors = a.anchors.clone();
        anchors.sort();
        anchors.dedup();
        assert_eq!(anchors.len(), 8);
    }

    #[test]
    fn variant_names() {
        let v: SafeVariant = serde_json::from_str("\"safe_mean_dists\"").unwrap();
        assert_eq!(v, SafeVariant::MeanDists);
        assert_eq!(serde_json::to_string(&SafeVariant::Cutoff).unwrap(), "\"safe_cutoff\"");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weights_bounded(labels in prop::collection::vec(0usize..3, 1..25), t in 0.0f64..1.0) {
                let (b, y) = batch_with(&labels, &vec![1.0; labels.len()]);
                let w = safeness_weight(&b, 0, &y);
                prop_assert!((0.0..=1.0).contains(&w));
                let c = cutoff_weight(w, t);
                prop_assert!(c <= w);
                prop_assert_eq!(w == 0.0, labels.iter().all(|&l| l == 0));
            }
        }
    }
}
