//! Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

use std::f64::consts::PI;

use serde::Serialize;

use super::{SelectionError, SupportSet};
use crate::dataset::{Dataset, VariableSchema};
use crate::evaluation::stars;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub variable: String,
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }

    pub fn significant(&self) -> bool {
        self.p_value < 0.05
    }
}

/// Largest gap between the two empirical CDFs, taken over every sample point.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small arguments.
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            s += (c * k * k).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let j = j as f64;
            let term = (-2.0 * j * j * lambda * lambda).exp();
            s += if j as u64 % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Two-sample test on raw values. The p-value uses the effective size
/// `n1 n2 / (n1 + n2)` in the limiting Kolmogorov distribution.
pub fn ks_two_sample(variable: &str, sample: &[f64], population: &[f64]) -> Result<KsResult, SelectionError> {
    if sample.is_empty() || population.is_empty() {
        return Err(SelectionError::EmptySample);
    }
    let d = ks_statistic(sample, population);
    let (n1, n2) = (sample.len() as f64, population.len() as f64);
    let ne = n1 * n2 / (n1 + n2);
    let p = if d == 0.0 {
        1.0
    } else {
        kolmogorov_survival(ne.sqrt() * d)
    };
    Ok(KsResult {
        variable: variable.to_string(),
        statistic: d,
        p_value: p,
    })
}

/// Per-variable comparison of a support set against the full dataset.
/// Categorical variables are compared on their numeric codes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentativenessReport {
    pub results: Vec<KsResult>,
}

impl RepresentativenessReport {
    pub fn significant(&self) -> Vec<&KsResult> {
        self.results.iter().filter(|r| r.significant()).collect()
    }

    /// `ns` when no variable differs at 0.05, otherwise the flagged
    /// variables with their stars.
    pub fn summary(&self, schema: &VariableSchema) -> String {
        let flagged = self.significant();
        if flagged.is_empty() {
            return "ns".into();
        }
        flagged
            .iter()
            .map(|r| format!("{}{}", label_of(schema, &r.variable), r.stars()))
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// `variable,d,p,stars` rows, plus a closing `summary,,,ns` row when
    /// nothing is significant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,d,p,stars\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                r.variable,
                r.statistic,
                r.p_value,
                r.stars()
            ));
        }
        if self.significant().is_empty() {
            out.push_str("summary,,,ns\n");
        }
        out
    }
}

fn label_of<'a>(schema: &'a VariableSchema, name: &'a str) -> &'a str {
    schema.get(name).map_or(name, |v| v.label.as_str())
}

pub fn representativeness_report(
    support: &SupportSet,
    full: &Dataset,
) -> Result<RepresentativenessReport, SelectionError> {
    if support.is_empty() {
        return Err(SelectionError::EmptySupport);
    }
    let schema = full.schema();
    let results = schema
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let sample: Vec<f64> = support.members().iter().map(|r| r.values[i]).collect();
            ks_two_sample(&v.name, &sample, &full.column(i))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RepresentativenessReport { results })
}

/// Collapses repeated samplings into one cell: each variable significant in
/// at least one repeat is listed with its strongest stars and the number of
/// significant repeats, e.g. `Public transit station* (1)`; `ns` otherwise.
pub fn summarize_repeats(reports: &[RepresentativenessReport], schema: &VariableSchema) -> String {
    let mut cells = Vec::new();
    for v in &schema.variables {
        let hits: Vec<&KsResult> = reports
            .iter()
            .flat_map(|r| r.results.iter())
            .filter(|r| r.variable == v.name && r.significant())
            .collect();
        if hits.is_empty() {
            continue;
        }
        let min_p = hits.iter().map(|r| r.p_value).fold(1.0, f64::min);
        cells.push(format!("{}{} ({})", v.label, stars(min_p), hits.len()));
    }
    if cells.is_empty() {
        "ns".into()
    } else {
        cells.join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_statistics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = ks_two_sample("x", &x, &x).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]), 1.0);
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
        assert!(ks_two_sample("x", &[], &x).is_err());
    }

    #[test]
    fn kolmogorov_reference_points() {
        // Standard table values of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 2e-4);
        assert!((kolmogorov_survival(0.5) - 0.963945).abs() < 1e-5);
        // Both series agree at the switch-over point.
        let lo = {
            let l: f64 = 1.18 - 1e-12;
            let c = -PI * PI / (8.0 * l * l);
            let s: f64 = (1..=20).map(|j| (c * ((2 * j - 1) as f64).powi(2)).exp()).sum();
            1.0 - (2.0 * PI).sqrt() / l * s
        };
        assert!((lo - kolmogorov_survival(1.18)).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn identical_samples_have_zero_statistic(x in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            prop_assert_eq!(ks_statistic(&x, &x), 0.0);
        }

        #[test]
        fn invariant_under_monotone_transform(
            a in proptest::collection::vec(-5.0f64..5.0, 1..30),
            b in proptest::collection::vec(-5.0f64..5.0, 1..30),
        ) {
            let f = |v: &Vec<f64>| v.iter().map(|x| x.exp() * 3.0 + 1.0).collect::<Vec<_>>();
            prop_assert_eq!(ks_statistic(&a, &b), ks_statistic(&f(&a), &f(&b)));
        }

        #[test]
        fn p_non_increasing_in_d(d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
            let ne = 30.0f64 * 80.0 / 110.0;
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(kolmogorov_survival(ne.sqrt() * hi) <= kolmogorov_survival(ne.sqrt() * lo) + 1e-12);
        }
    }
}
