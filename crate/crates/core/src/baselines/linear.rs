//! Linear regression on the encoded survey, with a design fitted to the
//! training rows.
//!
//! Numeric columns that are constant in the training rows are dropped. In
//! each one-hot group, categories absent from the training rows are dropped
//! and the most frequent remaining category (lowest code on ties) becomes
//! the reference level. Dropped columns contribute nothing at prediction time.

use serde::Serialize;

use super::ols::{fit_ols, predict_ols, LinearModel};
use super::ModelError;
use crate::dataset::FeatureMatrix;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearRegressor {
    /// Encoded columns kept in the design, in matrix order.
    pub kept: Vec<usize>,
    pub model: LinearModel,
}

fn design_columns(x: &FeatureMatrix) -> Vec<usize> {
    let cols = x.columns();
    let mut keep = Vec::new();
    let mut j = 0;
    while j < cols.len() {
        if cols[j].category.is_none() {
            let c = x.column(j);
            if c.iter().any(|&v| v != c[0]) {
                keep.push(j);
            }
            j += 1;
            continue;
        }
        let var = cols[j].variable;
        let end = (j..cols.len()).find(|&e| cols[e].variable != var).unwrap_or(cols.len());
        let counts: Vec<usize> = (j..end)
            .map(|c| x.column(c).iter().filter(|&&v| v != 0.0).count())
            .collect();
        let reference = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(k, _)| k);
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 && Some(k) != reference {
                keep.push(j + k);
            }
        }
        j = end;
    }
    keep
}

impl LinearRegressor {
    pub fn fit(x: &FeatureMatrix, y: &[f64]) -> Result<Self, ModelError> {
        let kept = design_columns(x);
        let model = fit_ols(&x.select_columns(&kept), y)?;
        Ok(Self { kept, model })
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
        if self.kept.iter().any(|&j| j >= x.cols()) {
            return Err(ModelError::Shape("matrix narrower than the fitted design".into()));
        }
        predict_ols(&self.model, &x.select_columns(&self.kept))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnInfo;

    #[test]
    fn reference_is_most_frequent_present_category() {
        // numeric t, constant k, one-hot group of 3 where category 0 never appears
        let rows = [
            [1.0, 5.0, 0.0, 1.0, 0.0],
            [2.0, 5.0, 0.0, 0.0, 1.0],
            [3.0, 5.0, 0.0, 0.0, 1.0],
            [4.0, 5.0, 0.0, 1.0, 0.0],
            [5.0, 5.0, 0.0, 0.0, 1.0],
        ];
        let columns = vec![
            ColumnInfo {
                name: "t".into(),
                variable: 0,
                category: None,
            },
            ColumnInfo {
                name: "k".into(),
                variable: 1,
                category: None,
            },
            ColumnInfo {
                name: "m=1".into(),
                variable: 2,
                category: Some(1),
            },
            ColumnInfo {
                name: "m=2".into(),
                variable: 2,
                category: Some(2),
            },
            ColumnInfo {
                name: "m=3".into(),
                variable: 2,
                category: Some(3),
            },
        ];
        let x = FeatureMatrix::new(
            5,
            rows.iter().flatten().copied().collect(),
            columns,
            vec!["t".into(), "k".into(), "m".into()],
        );
        assert_eq!(design_columns(&x), vec![0, 3]);
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 0.5 * r[0] - 2.0 * r[3]).collect();
        let fit = LinearRegressor::fit(&x, &y).unwrap();
        let p = fit.predict(&x).unwrap();
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
