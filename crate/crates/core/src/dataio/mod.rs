//! Tabular data ingestion: CSV loading, one-hot / z-score encoding and
//! stratified fold assignment.

mod encode;
mod folds;
mod load;

pub use encode::{encode, fit_transform_split, ColumnEncoding, FeatureEncoder};
pub use folds::{stratified_kfold, FoldAssignment};
pub use load::{load_csv, ColumnKind, ColumnSpec, RawDataset, Schema};
pub(crate) use load::format_real;

use crate::{Error, Matrix, Result};

/// Encoded dataset: real features with integer class labels in `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
    class_counts: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset and derives the per-class counts.
    ///
    /// Counts may be zero for a class when the dataset is a split of a larger
    /// one (test folds routinely miss the rarest classes).
    pub fn new(features: Matrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::dim("Dataset::new rows", labels.len(), features.nrows()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one feature".into()));
        }
        let c = class_names.len();
        let mut class_counts = vec![0usize; c];
        for (i, &y) in labels.iter().enumerate() {
            if y >= c {
                return Err(Error::InvalidArgument(format!(
                    "label {y} of row {i} outside 0..{c}"
                )));
            }
            class_counts[y] += 1;
        }
        Ok(Self {
            features,
            labels,
            class_names,
            class_counts,
        })
    }

    /// Convenience constructor naming classes `"0"`, `"1"`, ...
    pub fn from_labels(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().copied().max().map_or(0, |m| m + 1);
        let names = (0..c).map(|i| i.to_string()).collect();
        Self::new(features, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Number of classes with at least one row.
    pub fn n_present_classes(&self) -> usize {
        self.class_counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn class_name(&self, label: usize) -> &str {
        &self.class_names[label]
    }

    /// Rows selected by `indices`, in the given order. Class vocabulary is kept.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(features, labels, self.class_names.clone())
            .expect("subset of a valid dataset is valid")
    }

    /// Same rows and labels with a replacement feature matrix (e.g. embeddings).
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        Dataset::new(features, self.labels.clone(), self.class_names.clone())
    }
}
