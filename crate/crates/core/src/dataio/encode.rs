use serde::{Deserialize, Serialize};

use super::{ColumnKind, Dataset, RawDataset};
use crate::{Error, Matrix, Result};

/// Fitted transformation for one raw column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ColumnEncoding {
    /// z-score with population standard deviation; `std == 0` marks a
    /// constant column, which encodes to zeros.
    Numeric { mean: f64, std: f64 },
    /// One binary indicator per vocabulary entry.
    Categorical { vocab: Vec<String> },
}

impl ColumnEncoding {
    fn width(&self) -> usize {
        match self {
            ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::Categorical { vocab } => vocab.len(),
        }
    }
}

/// Encoding statistics fitted on one table and applicable to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub columns: Vec<(String, ColumnEncoding)>,
    pub classes: Vec<String>,
}

fn parse_numeric(raw: &RawDataset, row: usize, col: usize) -> Result<f64> {
    let cell = &raw.rows[row][col];
    let v: f64 = cell.parse().map_err(|_| Error::MalformedRow {
        row,
        message: format!("column '{}': '{cell}' is not a number", raw.columns[col].name),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            row,
            message: format!("column '{}': non-finite value", raw.columns[col].name),
        });
    }
    Ok(v)
}

impl FeatureEncoder {
    /// Fits means, standard deviations, category vocabularies and the class
    /// vocabulary (first-appearance order) on `raw`.
    pub fn fit(raw: &RawDataset) -> Result<Self> {
        if raw.n_rows() == 0 {
            return Err(Error::InvalidArgument("cannot fit encoder on zero rows".into()));
        }
        let n = raw.n_rows() as f64;
        let mut columns = Vec::with_capacity(raw.columns.len());
        for (j, spec) in raw.columns.iter().enumerate() {
            let enc = match spec.kind {
                ColumnKind::Numeric => {
                    let vals = (0..raw.n_rows())
                        .map(|i| parse_numeric(raw, i, j))
                        .collect::<Result<Vec<f64>>>()?;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let mut std = var.sqrt();
                    // rounding noise on a constant column
                    if std <= 1e-12 * mean.abs().max(1.0) {
                        std = 0.0;
                    }
                    ColumnEncoding::Numeric { mean, std }
                }
                ColumnKind::Categorical => {
                    let mut vocab: Vec<String> = Vec::new();
                    for row in &raw.rows {
                        if !vocab.contains(&row[j]) {
                            vocab.push(row[j].clone());
                        }
                    }
                    ColumnEncoding::Categorical { vocab }
                }
            };
            columns.push((spec.name.clone(), enc));
        }
        Ok(Self {
            columns,
            classes: raw.class_names(),
        })
    }

    /// Replaces the class vocabulary, e.g. with one taken from the full table
    /// so that every fold shares the same label ids.
    pub fn with_classes(mut self, classes: Vec<String>) -> Self {
        self.classes = classes;
        self
    }

    pub fn output_dim(&self) -> usize {
        self.columns.iter().map(|(_, e)| e.width()).sum()
    }

    pub fn label_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Applies the fitted statistics. Unseen categories encode to an all-zero
    /// block; unseen labels are an error.
    pub fn transform(&self, raw: &RawDataset) -> Result<Dataset> {
        if raw.columns.len() != self.columns.len()
            || raw
                .columns
                .iter()
                .zip(&self.columns)
                .any(|(spec, (name, _))| spec.name != *name)
        {
            return Err(Error::Schema("column layout differs from the fitted encoder".into()));
        }
        let width = self.output_dim();
        let mut features = Matrix::zeros((raw.n_rows(), width));
        for i in 0..raw.n_rows() {
            let mut offset = 0;
            for (j, (_, enc)) in self.columns.iter().enumerate() {
                match enc {
                    ColumnEncoding::Numeric { mean, std } => {
                        let v = parse_numeric(raw, i, j)?;
                        features[[i, offset]] = if *std > 0.0 { (v - mean) / std } else { 0.0 };
                    }
                    ColumnEncoding::Categorical { vocab } => {
                        if let Some(k) = vocab.iter().position(|c| *c == raw.rows[i][j]) {
                            features[[i, offset + k]] = 1.0;
                        }
                    }
                }
                offset += enc.width();
            }
        }
        let labels = raw
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                self.label_of(l).ok_or_else(|| Error::MalformedRow {
                    row: i,
                    message: format!("label '{l}' not in the class vocabulary"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        Dataset::new(features, labels, self.classes.clone())
    }
}

/// Fits and applies the encoding on the same table.
pub fn encode(raw: &RawDataset) -> Result<Dataset> {
    FeatureEncoder::fit(raw)?.transform(raw)
}

/// Fits encoding statistics on `train` only and applies them to both splits.
///
/// Labels seen only in `test` are appended to the class vocabulary after the
/// training classes, so both outputs share one id space.
pub fn fit_transform_split(train: &RawDataset, test: &RawDataset) -> Result<(Dataset, Dataset)> {
    let mut enc = FeatureEncoder::fit(train)?;
    for l in &test.labels {
        if !enc.classes.contains(l) {
            enc.classes.push(l.clone());
        }
    }
    Ok((enc.transform(train)?, enc.transform(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{ColumnSpec, Schema};

    fn numeric(vals: &[f64], labels: &[&str]) -> RawDataset {
        let rows: Vec<Vec<f64>> = vals.iter().map(|v| vec![*v]).collect();
        RawDataset::from_numeric(&["x"], &rows, labels).unwrap()
    }

    #[test]
    fn one_hot_blocks() {
        let raw = crate::dataio::load::read_csv(
            "c,class\na,0\nb,1\na,0\n".as_bytes(),
            &Schema::new("class").with_categorical(["c"]),
        )
        .unwrap();
        let ds = encode(&raw).unwrap();
        assert_eq!(ds.features(), &ndarray::array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn zscore_of_two_points() {
        // mean 2, population std 1
        let ds = encode(&numeric(&[1.0, 3.0], &["a", "b"])).unwrap();
        assert_eq!(ds.features().column(0).to_vec(), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_column_becomes_zero() {
        let ds = encode(&numeric(&[5.0, 5.0, 5.0], &["a", "a", "b"])).unwrap();
        assert_eq!(ds.features().column(0).to_vec(), vec![0.0, 0.0, 0.0]);
        let ds = encode(&numeric(&[0.1, 0.1, 0.1], &["a", "a", "b"])).unwrap();
        assert_eq!(ds.features().column(0).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn labels_in_first_appearance_order() {
        let ds = encode(&numeric(&[1.0, 2.0, 3.0], &["z", "a", "z"])).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["z".to_string(), "a".to_string()]);
        let decoded: Vec<&str> = ds.labels().iter().map(|&l| ds.class_name(l)).collect();
        assert_eq!(decoded, vec!["z", "a", "z"]);
    }

    #[test]
    fn test_split_uses_train_statistics() {
        // train mean 1, std 1
        let train = numeric(&[0.0, 2.0], &["a", "b"]);
        let test = numeric(&[2.0], &["a"]);
        let (_, te) = fit_transform_split(&train, &test).unwrap();
        assert_eq!(te.features()[[0, 0]], 1.0);
    }

    #[test]
    fn unseen_category_is_zero_block() {
        let cols = vec![ColumnSpec {
            name: "c".into(),
            kind: ColumnKind::Categorical,
        }];
        let train = RawDataset::new(
            cols.clone(),
            vec![vec!["a".into()], vec!["b".into()]],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let test = RawDataset::new(cols, vec![vec!["q".into()]], vec!["0".into()]).unwrap();
        let (_, te) = fit_transform_split(&train, &test).unwrap();
        assert_eq!(te.features().row(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn identical_split_matches_encode() {
        let raw = numeric(&[3.0, -1.0, 4.5, 2.0], &["a", "b", "a", "c"]);
        let (tr, te) = fit_transform_split(&raw, &raw).unwrap();
        let full = encode(&raw).unwrap();
        assert_eq!(tr, full);
        assert_eq!(te, full);
    }

    #[test]
    fn bad_number_names_row() {
        let raw = RawDataset::new(
            vec![ColumnSpec {
                name: "x".into(),
                kind: ColumnKind::Numeric,
            }],
            vec![vec!["1".into()], vec!["oops".into()]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(encode(&raw), Err(Error::MalformedRow { row: 1, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn standardized_columns_have_unit_moments(
                vals in prop::collection::vec(-1e3f64..1e3, 2..40)
            ) {
                let labels: Vec<&str> = vals.iter().map(|_| "a").collect();
                let ds = encode(&numeric(&vals, &labels)).unwrap();
                let col = ds.features().column(0);
                let n = col.len() as f64;
                let mean = col.sum() / n;
                let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!(mean.abs() < 1e-9);
                if col.iter().any(|v| *v != 0.0) {
                    prop_assert!((std - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
