//! Numeric encoding of records: z-scored numerics, one-hot categoricals.

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, RespondentRecord, VariableKind, VariableSchema};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnEncoding {
    /// `constant` columns had zero spread when fitted and always encode to 0.
    Numeric {
        mean: f64,
        std: f64,
        constant: bool,
    },
    OneHot {
        codes: Vec<i64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableEncoding {
    pub name: String,
    pub offset: usize,
    pub encoding: ColumnEncoding,
}

impl VariableEncoding {
    pub fn width(&self) -> usize {
        match &self.encoding {
            ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::OneHot { codes } => codes.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub variables: Vec<VariableEncoding>,
    pub width: usize,
}

/// Describes one encoded column.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnInfo {
    pub name: String,
    /// Index of the parent variable in the schema.
    pub variable: usize,
    /// Category code for one-hot columns.
    pub category: Option<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl EncodingSpec {
    /// Builds a spec from explicit per-variable centres and scales
    /// (`None` for categoricals). Used for reference encodings that do
    /// not depend on any particular sample.
    pub fn from_moments(schema: &VariableSchema, moments: &[Option<(f64, f64)>]) -> Self {
        assert_eq!(moments.len(), schema.len());
        let mut variables = Vec::with_capacity(schema.len());
        let mut offset = 0;
        for (v, m) in schema.variables.iter().zip(moments) {
            let encoding = match v.kind {
                VariableKind::Categorical => ColumnEncoding::OneHot {
                    codes: v.categories.iter().map(|c| c.code).collect(),
                },
                VariableKind::Numeric => {
                    let (mean, std) = m.expect("numeric variable needs moments");
                    let constant = !std.is_finite() || std <= 0.0;
                    ColumnEncoding::Numeric { mean, std, constant }
                }
            };
            let ve = VariableEncoding {
                name: v.name.clone(),
                offset,
                encoding,
            };
            offset += ve.width();
            variables.push(ve);
        }
        EncodingSpec {
            variables,
            width: offset,
        }
    }

    /// Names of numeric variables that were constant when fitted.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter(|v| matches!(v.encoding, ColumnEncoding::Numeric { constant: true, .. }))
            .map(|v| v.name.as_str())
            .collect()
    }

    pub fn columns(&self) -> Vec<ColumnInfo> {
        let mut out = Vec::with_capacity(self.width);
        for (vi, v) in self.variables.iter().enumerate() {
            match &v.encoding {
                ColumnEncoding::Numeric { .. } => out.push(ColumnInfo {
                    name: v.name.clone(),
                    variable: vi,
                    category: None,
                }),
                ColumnEncoding::OneHot { codes } => out.extend(codes.iter().map(|&c| ColumnInfo {
                    name: format!("{}={}", v.name, c),
                    variable: vi,
                    category: Some(c),
                })),
            }
        }
        out
    }

    pub fn encode_values(&self, values: &[f64]) -> Result<FeatureVector, DatasetError> {
        if values.len() != self.variables.len() {
            return Err(DatasetError::Encoding(format!(
                "expected {} values, got {}",
                self.variables.len(),
                values.len()
            )));
        }
        let mut out = vec![0.0; self.width];
        for (v, &x) in self.variables.iter().zip(values) {
            match &v.encoding {
                ColumnEncoding::Numeric { mean, std, constant } => {
                    out[v.offset] = if *constant { 0.0 } else { (x - mean) / std };
                }
                ColumnEncoding::OneHot { codes } => {
                    let slot = codes
                        .iter()
                        .position(|&c| c as f64 == x)
                        .ok_or_else(|| DatasetError::Encoding(format!("{}: unknown category {}", v.name, x)))?;
                    out[v.offset + slot] = 1.0;
                }
            }
        }
        Ok(FeatureVector(out))
    }
}

/// Fits z-score moments (sample standard deviation) on the dataset and fixes
/// one-hot ordering from the schema.
pub fn fit_encoding(dataset: &Dataset) -> Result<EncodingSpec, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let schema = dataset.schema();
    let moments: Vec<Option<(f64, f64)>> = schema
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| match v.kind {
            VariableKind::Categorical => None,
            VariableKind::Numeric => Some(mean_and_sample_std(&dataset.column(i))),
        })
        .collect();
    let spec = EncodingSpec::from_moments(schema, &moments);
    for name in spec.constant_columns() {
        log::warn!("column `{name}` is constant; encoded as 0");
    }
    Ok(spec)
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn encode(record: &RespondentRecord, spec: &EncodingSpec) -> Result<FeatureVector, DatasetError> {
    spec.encode_values(&record.values).map_err(|e| DatasetError::Record {
        id: record.id.clone(),
        reason: e.to_string(),
    })
}

/// Row-major dense matrix of encoded features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    columns: Vec<ColumnInfo>,
    /// Parent variable names, indexed by `ColumnInfo::variable`.
    variables: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, data: Vec<f64>, columns: Vec<ColumnInfo>, variables: Vec<String>) -> Self {
        let cols = columns.len();
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self {
            rows,
            cols,
            data,
            columns,
            variables,
        }
    }

    /// Plain numeric matrix; each column is its own variable `x0`, `x1`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let names: Vec<String> = (0..cols).map(|j| format!("x{j}")).collect();
        let columns = names
            .iter()
            .enumerate()
            .map(|(j, n)| ColumnInfo {
                name: n.clone(),
                variable: j,
                category: None,
            })
            .collect();
        let data = rows.iter().flat_map(|r| {
            assert_eq!(r.len(), cols, "ragged rows");
            r.iter().copied()
        });
        Self::new(rows.len(), data.collect(), columns, names)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> &[ColumnInfo] {
        &self.columns
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(keep.iter().map(|&j| r[j]));
        }
        FeatureMatrix::new(
            self.rows,
            data,
            keep.iter().map(|&j| self.columns[j].clone()).collect(),
            self.variables.clone(),
        )
    }

    pub fn select_rows(&self, keep: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &i in keep {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(keep.len(), data, self.columns.clone(), self.variables.clone())
    }

    pub fn with_column_data(&self, j: usize, values: &[f64]) -> FeatureMatrix {
        let mut out = self.clone();
        for (i, &v) in values.iter().enumerate() {
            out.data[i * self.cols + j] = v;
        }
        out
    }
}

pub fn encode_dataset(dataset: &Dataset, spec: &EncodingSpec) -> Result<FeatureMatrix, DatasetError> {
    let mut data = Vec::with_capacity(dataset.len() * spec.width);
    for r in dataset.records() {
        data.extend(encode(r, spec)?.0);
    }
    Ok(FeatureMatrix::new(
        dataset.len(),
        data,
        spec.columns(),
        dataset.schema().names(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Category, Dimension, VariableDescriptor};
    use std::sync::Arc;

    fn tiny_schema() -> VariableSchema {
        let num = |n: &str| VariableDescriptor {
            name: n.into(),
            label: n.into(),
            dimension: Dimension::TravelCharacteristics,
            kind: VariableKind::Numeric,
            unit: String::new(),
            categories: vec![],
            min: None,
            greater_than: None,
        };
        let mode = VariableDescriptor {
            name: "mode".into(),
            label: "Mode".into(),
            dimension: Dimension::TravelCharacteristics,
            kind: VariableKind::Categorical,
            unit: String::new(),
            categories: (1..=9)
                .map(|c| Category {
                    code: c,
                    label: format!("m{c}"),
                })
                .collect(),
            min: None,
            greater_than: None,
        };
        VariableSchema::new("satisfaction", vec![num("t"), num("k"), mode]).unwrap()
    }

    fn ds(rows: &[(f64, f64, f64)]) -> Dataset {
        let schema = Arc::new(tiny_schema());
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, &(t, k, m))| RespondentRecord {
                id: format!("r{i}"),
                values: vec![t, k, m],
                satisfaction: 4.0,
            })
            .collect();
        Dataset::new(schema, recs).unwrap()
    }

    #[test]
    fn numeric_moments_use_sample_std() {
        let d = ds(&[(1.0, 5.0, 1.0), (2.0, 5.0, 3.0), (3.0, 5.0, 9.0)]);
        let spec = fit_encoding(&d).unwrap();
        assert_eq!(
            spec.variables[0].encoding,
            ColumnEncoding::Numeric {
                mean: 2.0,
                std: 1.0,
                constant: false
            }
        );
        assert_eq!(spec.constant_columns(), vec!["k"]);
        assert_eq!(spec.variables[2].width(), 9);
        assert_eq!(spec.width, 11);
    }

    #[test]
    fn encodes_z_scores_and_one_hot() {
        let d = ds(&[(1.0, 5.0, 1.0), (2.0, 5.0, 3.0), (3.0, 5.0, 9.0)]);
        let spec = fit_encoding(&d).unwrap();
        let v = encode(&d.records()[1], &spec).unwrap();
        assert_eq!(v.0[0], 0.0);
        assert_eq!(v.0[1], 0.0);
        assert_eq!(&v.0[2..], &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let again = encode(&d.records()[1], &spec).unwrap();
        assert_eq!(v, again);
        let bad = RespondentRecord {
            id: "x".into(),
            values: vec![1.0, 1.0, 12.0],
            satisfaction: 4.0,
        };
        assert!(encode(&bad, &spec).is_err());
    }

    #[test]
    fn matrix_layout() {
        let d = ds(&[(1.0, 5.0, 1.0), (2.0, 5.0, 3.0), (3.0, 5.0, 9.0)]);
        let spec = fit_encoding(&d).unwrap();
        let m = encode_dataset(&d, &spec).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 11));
        assert_eq!(m.columns()[4].name, "mode=3");
        assert_eq!(m.columns()[4].variable, 2);
        assert_eq!(m.get(2, 10), 1.0);
        let sub = m.select_columns(&[0, 4]);
        assert_eq!(sub.row(1), &[0.0, 1.0]);
    }
}
