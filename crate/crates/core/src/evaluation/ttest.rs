use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{stars, EvalError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TTestOutcome {
    Statistic {
        t: f64,
        df: f64,
        p: f64,
    },
    /// Both groups have zero variance but different means: the difference is
    /// deterministic and no finite statistic exists.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TTestResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub outcome: TTestOutcome,
}

impl TTestResult {
    pub fn p_value(&self) -> Option<f64> {
        match self.outcome {
            TTestOutcome::Statistic { p, .. } => Some(p),
            TTestOutcome::Degenerate => None,
        }
    }

    pub fn t(&self) -> Option<f64> {
        match self.outcome {
            TTestOutcome::Statistic { t, .. } => Some(t),
            TTestOutcome::Degenerate => None,
        }
    }

    pub fn stars(&self) -> &'static str {
        self.p_value().map_or("", stars)
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Welch's unequal-variance t-test, two-sided, with Welch-Satterthwaite
/// degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TTestResult, EvalError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(EvalError::TooFewObservations(a.len(), b.len()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    // Variances at rounding level count as zero.
    let scale = ma.abs().max(mb.abs()).max(f64::MIN_POSITIVE);
    let tiny = 1e-12 * scale;
    let outcome = if se2.sqrt() <= tiny {
        if (ma - mb).abs() <= tiny {
            TTestOutcome::Statistic {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
            }
        } else {
            TTestOutcome::Degenerate
        }
    } else {
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
        TTestOutcome::Statistic { t, df, p }
    };
    Ok(TTestResult {
        mean_a: ma,
        mean_b: mb,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_groups() {
        let r = welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t(), r.p_value()), (Some(0.0), Some(1.0)));
        let r = welch_t(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((r.t(), r.p_value()), (Some(0.0), Some(1.0)));
    }

    #[test]
    fn hand_case() {
        // Variances 1 and 1, se = sqrt(2/3), t = -3 / sqrt(2/3), df = 4.
        let r = welch_t(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        let t = r.t().unwrap();
        assert!((t + 3.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((t + 3.674).abs() < 1e-3);
        let TTestOutcome::Statistic { df, p, .. } = r.outcome else {
            panic!()
        };
        assert!((df - 4.0).abs() < 1e-12);
        // t(4) two-sided tail at |t| = 3.6742 is 0.021312.
        assert!((p - 0.021312).abs() < 1e-5, "p = {p}");
        assert_eq!(r.stars(), "*");
    }

    #[test]
    fn degenerate_and_errors() {
        let r = welch_t(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.outcome, TTestOutcome::Degenerate);
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
        // Renormalized weights that differ only in the last bit.
        let w = 0.4 / 15.0;
        let r = welch_t(&[w, w * (1.0 + f64::EPSILON), w], &[w, w, w * (1.0 - f64::EPSILON)]).unwrap();
        assert_eq!((r.t(), r.p_value()), (Some(0.0), Some(1.0)));
    }

    proptest! {
        #[test]
        fn antisymmetric(
            a in proptest::collection::vec(-10.0f64..10.0, 2..8),
            b in proptest::collection::vec(-10.0f64..10.0, 2..8),
        ) {
            let ab = welch_t(&a, &b).unwrap();
            let ba = welch_t(&b, &a).unwrap();
            if let (Some(t1), Some(t2)) = (ab.t(), ba.t()) {
                prop_assert!((t1 + t2).abs() < 1e-12);
                prop_assert!((ab.p_value().unwrap() - ba.p_value().unwrap()).abs() < 1e-12);
                let p = ab.p_value().unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
