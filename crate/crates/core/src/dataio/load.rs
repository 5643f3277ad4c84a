use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column description for a CSV file.
///
/// Every header column other than the label is a feature; it is categorical
/// when listed in `categorical`, numeric otherwise. Columns listed in
/// `ignore` are dropped (e.g. row identifiers).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub label_column: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub ignore: Vec<String>,
}

impl Schema {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            ..Self::default()
        }
    }

    pub fn with_categorical<I, S>(mut self, columns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.categorical.extend(columns.into_iter().map(Into::into));
        self
    }
}

/// Unencoded table: string cells for the feature columns plus the label cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<String>,
}

impl RawDataset {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<Vec<String>>, labels: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::dim("RawDataset rows vs labels", rows.len(), labels.len()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::MalformedRow {
                    row: i,
                    message: format!("expected {} fields, found {}", columns.len(), row.len()),
                });
            }
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::MalformedRow {
                    row: i,
                    message: "missing label value".into(),
                });
            }
        }
        Ok(Self {
            columns,
            rows,
            labels,
        })
    }

    /// All-numeric table built from a real matrix and label strings.
    pub fn from_numeric(names: &[&str], values: &[Vec<f64>], labels: &[&str]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| ColumnSpec {
                name: n.to_string(),
                kind: ColumnKind::Numeric,
            })
            .collect();
        let rows = values
            .iter()
            .map(|r| r.iter().map(|v| format_real(*v)).collect())
            .collect();
        Self::new(columns, rows, labels.iter().map(|s| s.to_string()).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Distinct label values in order of first appearance.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for l in &self.labels {
            if !names.contains(l) {
                names.push(l.clone());
            }
        }
        names
    }
}

/// Shortest decimal that parses back to the same f64.
pub(crate) fn format_real(v: f64) -> String {
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Reads a comma-separated file with a header row.
///
/// Row indices in errors count data rows from 0 (the header is not counted).
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub(crate) fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let label_pos = header
        .iter()
        .position(|h| *h == schema.label_column)
        .ok_or_else(|| {
            Error::Schema(format!("label column '{}' not in header", schema.label_column))
        })?;
    for name in schema.categorical.iter().chain(&schema.ignore) {
        if !header.contains(name) {
            return Err(Error::Schema(format!("column '{name}' not in header")));
        }
        if *name == schema.label_column {
            return Err(Error::Schema(format!(
                "label column '{name}' cannot also be a feature or ignored column"
            )));
        }
    }

    let feature_pos: Vec<usize> = (0..header.len())
        .filter(|&j| j != label_pos && !schema.ignore.contains(&header[j]))
        .collect();
    let columns: Vec<ColumnSpec> = feature_pos
        .iter()
        .map(|&j| ColumnSpec {
            name: header[j].clone(),
            kind: if schema.categorical.contains(&header[j]) {
                ColumnKind::Categorical
            } else {
                ColumnKind::Numeric
            },
        })
        .collect();
    if columns.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                row: i,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let label = &record[label_pos];
        if label.is_empty() {
            return Err(Error::MalformedRow {
                row: i,
                message: "missing label value".into(),
            });
        }
        rows.push(feature_pos.iter().map(|&j| record[j].to_string()).collect());
        labels.push(label.to_string());
    }
    RawDataset::new(columns, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, schema: &Schema) -> Result<RawDataset> {
        read_csv(text.as_bytes(), schema)
    }

    #[test]
    fn reads_numeric_rows_in_order() {
        let raw = parse("x,y,class\n1,2,a\n3,4,b\n5,6,a\n", &Schema::new("class")).unwrap();
        assert_eq!(raw.n_rows(), 3);
        assert_eq!(raw.columns.len(), 2);
        assert!(raw.columns.iter().all(|c| c.kind == ColumnKind::Numeric));
        assert_eq!(raw.rows[1], vec!["3", "4"]);
        assert_eq!(raw.labels, vec!["a", "b", "a"]);
    }

    #[test]
    fn short_row_names_its_index() {
        let err = parse("x,y,class\n1,2,a\n3,b\n", &Schema::new("class")).unwrap_err();
        match err {
            Error::MalformedRow { row, .. } => assert_eq!(row, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_label_is_rejected() {
        let err = parse("x,class\n1,a\n2,\n", &Schema::new("class")).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 1, .. }));
    }

    #[test]
    fn categorical_values_kept_verbatim() {
        let schema = Schema::new("class").with_categorical(["c"]);
        let raw = parse("c,class\na,0\nb,1\na,0\n", &schema).unwrap();
        assert_eq!(raw.columns[0].kind, ColumnKind::Categorical);
        let col: Vec<&str> = raw.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(col, vec!["a", "b", "a"]);
    }

    #[test]
    fn missing_label_column_is_schema_error() {
        assert!(matches!(
            parse("x,y\n1,2\n", &Schema::new("class")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn ignored_columns_are_dropped() {
        let schema = Schema {
            label_column: "class".into(),
            categorical: vec![],
            ignore: vec!["id".into()],
        };
        let raw = parse("id,x,class\nr1,1,a\nr2,2,b\n", &schema).unwrap();
        assert_eq!(raw.columns.len(), 1);
        assert_eq!(raw.columns[0].name, "x");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/definitely/missing.csv", &Schema::new("c")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
