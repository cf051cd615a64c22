use serde::Serialize;

use super::ttest::{welch_t, TTestResult};
use super::EvalError;

/// Non-negative weights per variable that sum to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceVector {
    entries: Vec<(String, f64)>,
}

impl ImportanceVector {
    /// Accepts weights that already sum to one within `tol`.
    pub fn new(entries: Vec<(String, f64)>, tol: f64) -> Result<Self, EvalError> {
        if entries.is_empty() {
            return Err(EvalError::InvalidImportance("no entries".into()));
        }
        if let Some((n, w)) = entries.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(EvalError::InvalidImportance(format!("`{n}` has weight {w}")));
        }
        let sum: f64 = entries.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > tol {
            return Err(EvalError::InvalidImportance(format!("weights sum to {sum}")));
        }
        Ok(Self { entries })
    }

    /// Divides raw non-negative weights by their total; all-zero input
    /// becomes the uniform vector.
    pub fn normalized(raw: Vec<(String, f64)>) -> Result<Self, EvalError> {
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        if raw.iter().any(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(EvalError::InvalidImportance("negative or non-finite weight".into()));
        }
        let n = raw.len() as f64;
        let entries = raw
            .into_iter()
            .map(|(k, w)| (k, if total > 0.0 { w / total } else { 1.0 / n }))
            .collect();
        Self::new(entries, 1e-9)
    }

    pub fn get(&self, variable: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == variable).map(|(_, w)| *w)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTest {
    pub variable: String,
    pub model_a: String,
    pub model_b: String,
    pub result: TTestResult,
}

/// Per-variable importance comparison across models.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceComparison {
    pub variables: Vec<String>,
    pub models: Vec<String>,
    /// `repeats[m][v]` holds model `m`'s weights for variable `v`, one per repeat.
    pub repeats: Vec<Vec<Vec<f64>>>,
    pub means: Vec<Vec<f64>>,
    /// Ordered by variable, then model pair `(i, j)` with `i < j`.
    pub tests: Vec<PairTest>,
}

impl ImportanceComparison {
    pub fn pair_count(&self) -> usize {
        self.models.len() * (self.models.len().saturating_sub(1)) / 2
    }

    pub fn test(&self, variable: &str, a: &str, b: &str) -> Option<&PairTest> {
        self.tests
            .iter()
            .find(|t| t.variable == variable && t.model_a == a && t.model_b == b)
    }
}

/// Welch t-tests for every variable and every pair of models.
pub fn compare_importances(
    per_model: &[(String, Vec<ImportanceVector>)],
    variables: &[String],
) -> Result<ImportanceComparison, EvalError> {
    let mut repeats = Vec::with_capacity(per_model.len());
    let mut means = Vec::with_capacity(per_model.len());
    for (model, vectors) in per_model {
        if vectors.len() < 2 {
            return Err(EvalError::TooFewRepeats(model.clone()));
        }
        let mut per_var = Vec::with_capacity(variables.len());
        for v in variables {
            let xs = vectors
                .iter()
                .map(|iv| {
                    iv.get(v).ok_or_else(|| EvalError::MissingVariable {
                        model: model.clone(),
                        variable: v.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            per_var.push(xs);
        }
        means.push(
            per_var
                .iter()
                .map(|xs| xs.iter().sum::<f64>() / xs.len() as f64)
                .collect(),
        );
        repeats.push(per_var);
    }
    let mut tests = Vec::new();
    for (vi, v) in variables.iter().enumerate() {
        for i in 0..per_model.len() {
            for j in i + 1..per_model.len() {
                tests.push(PairTest {
                    variable: v.clone(),
                    model_a: per_model[i].0.clone(),
                    model_b: per_model[j].0.clone(),
                    result: welch_t(&repeats[i][vi], &repeats[j][vi])?,
                });
            }
        }
    }
    Ok(ImportanceComparison {
        variables: variables.to_vec(),
        models: per_model.iter().map(|(m, _)| m.clone()).collect(),
        repeats,
        means,
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(ws: &[(&str, f64)]) -> ImportanceVector {
        ImportanceVector::normalized(ws.iter().map(|(n, w)| (n.to_string(), *w)).collect()).unwrap()
    }

    #[test]
    fn vector_validation() {
        assert!(ImportanceVector::new(vec![("a".into(), 0.5), ("b".into(), 0.4)], 1e-6).is_err());
        assert!(ImportanceVector::new(vec![("a".into(), -0.5), ("b".into(), 1.5)], 1e-6).is_err());
        let u = ImportanceVector::normalized(vec![("a".into(), 0.0), ("b".into(), 0.0)]).unwrap();
        assert_eq!(u.get("a"), Some(0.5));
    }

    #[test]
    fn identical_models_no_stars() {
        let v = iv(&[("a", 0.3), ("b", 0.7)]);
        let per = vec![
            ("m1".to_string(), vec![v.clone(), v.clone(), v.clone()]),
            ("m2".to_string(), vec![v.clone(), v.clone(), v.clone()]),
            ("m3".to_string(), vec![v.clone(), v.clone(), v]),
        ];
        let c = compare_importances(&per, &["a".into(), "b".into()]).unwrap();
        assert_eq!(c.tests.len(), 2 * 3);
        assert_eq!(c.pair_count(), 3);
        for t in &c.tests {
            assert_eq!(t.result.t(), Some(0.0));
            assert_eq!(t.result.stars(), "");
        }
    }

    #[test]
    fn separated_weights_are_starred() {
        let hi = [0.50, 0.51, 0.49];
        let lo = [0.10, 0.11, 0.09];
        let per = vec![
            (
                "big".to_string(),
                hi.iter().map(|&w| iv(&[("x", w), ("rest", 1.0 - w)])).collect(),
            ),
            (
                "small".to_string(),
                lo.iter().map(|&w| iv(&[("x", w), ("rest", 1.0 - w)])).collect(),
            ),
        ];
        let c = compare_importances(&per, &["x".into(), "rest".into()]).unwrap();
        let t = c.test("x", "big", "small").unwrap();
        assert_eq!(t.result.stars(), "**");
        assert!((c.means[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_variable_and_few_repeats() {
        let v = iv(&[("a", 1.0)]);
        let per = vec![("m".to_string(), vec![v.clone(), v.clone()])];
        assert!(matches!(
            compare_importances(&per, &["a".into(), "b".into()]),
            Err(EvalError::MissingVariable { .. })
        ));
        let per = vec![("m".to_string(), vec![v])];
        assert!(matches!(
            compare_importances(&per, &["a".into()]),
            Err(EvalError::TooFewRepeats(_))
        ));
    }
}
