//! Downstream classifiers (1-NN, LDA, CART) and evaluation metrics.

mod lda;
mod metrics;
mod tree;

pub use lda::{lda_fit, lda_predict, FittedLda};
pub use metrics::{confusion_matrix, gmean_multiclass, gmean_over_present, macro_f1, recalls};
pub use tree::{
    balanced_weights, best_split, tree_fit, tree_predict, FittedTree, Node, SplitChoice, MIN_SAMPLES_LEAF,
    MIN_SAMPLES_SPLIT,
};

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn1,
    Lda,
    Tree,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedClassifier {
    Knn1(Dataset),
    Lda(FittedLda),
    Tree(FittedTree),
}

pub fn fit(kind: ClassifierKind, train: &Dataset) -> Result<FittedClassifier> {
    Ok(match kind {
        ClassifierKind::Knn1 => {
            if train.n_rows() == 0 {
                return Err(Error::InvalidArgument("1-NN needs training rows".into()));
            }
            FittedClassifier::Knn1(train.clone())
        }
        ClassifierKind::Lda => FittedClassifier::Lda(lda_fit(train)?),
        ClassifierKind::Tree => FittedClassifier::Tree(tree_fit(train)?),
    })
}

pub fn predict(model: &FittedClassifier, features: &Matrix) -> Result<Vec<usize>> {
    match model {
        FittedClassifier::Knn1(train) => knn1(train, features),
        FittedClassifier::Lda(m) => lda_predict(m, features),
        FittedClassifier::Tree(m) => tree_predict(m, features),
    }
}

/// Label of the Euclidean-nearest training row; ties go to the smaller
/// training index.
pub fn knn1(train: &Dataset, features: &Matrix) -> Result<Vec<usize>> {
    let x = train.features();
    if features.ncols() != x.ncols() {
        return Err(Error::dim("1-NN features", x.ncols(), features.ncols()));
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("1-NN needs training rows".into()));
    }
    Ok(features
        .rows()
        .into_iter()
        .map(|q| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, r) in x.rows().into_iter().enumerate() {
                let d: f64 = q.iter().zip(r.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            train.labels()[best]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn knn1_exact_match_and_tie() {
        let ds = Dataset::from_labels(array![[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]], vec![1, 0, 1]).unwrap();
        assert_eq!(knn1(&ds, &array![[5.0, 5.0]]).unwrap(), vec![1]);
        // equidistant from rows 0 and 1: row 0 wins
        assert_eq!(knn1(&ds, &array![[1.0, 0.0]]).unwrap(), vec![1]);
    }

    #[test]
    fn knn1_recovers_training_labels() {
        let x = Matrix::from_shape_fn((30, 3), |(i, j)| (i * 3 + j) as f64 * 0.37);
        let y: Vec<usize> = (0..30).map(|i| i % 4).collect();
        let ds = Dataset::from_labels(x.clone(), y.clone()).unwrap();
        assert_eq!(knn1(&ds, &x).unwrap(), y);
    }

    #[test]
    fn classifier_names() {
        let k: ClassifierKind = serde_json::from_str("\"knn1\"").unwrap();
        assert_eq!(k, ClassifierKind::Knn1);
        assert!(serde_json::from_str::<ClassifierKind>("\"svm\"").is_err());
    }
}
