use std::fmt;

use serde::Serialize;

use super::EvalError;

fn check(y: &[f64], yhat: &[f64]) -> Result<(), EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch(y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Mean absolute percentage error as a fraction (0.241, not 24.1).
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    check(y, yhat)?;
    if let Some(i) = y.iter().position(|&v| v == 0.0) {
        return Err(EvalError::ZeroLabel(i));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| ((a - b) / a).abs()).sum::<f64>() / y.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricPair {
    pub mse: f64,
    pub mape: f64,
    pub n: usize,
}

pub fn evaluate(y: &[f64], yhat: &[f64]) -> Result<MetricPair, EvalError> {
    Ok(MetricPair {
        mse: mse(y, yhat)?,
        mape: mape(y, yhat)?,
        n: y.len(),
    })
}

/// Mean with sample standard deviation; `std` is `None` for one repeat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: Option<f64>,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.len() >= 2).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Some(Self { mean, std })
    }
}

/// Renders `0.762 (0.114)`, or `0.762 (n/a)` for a single repeat.
impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.3} ({:.3})", self.mean, s),
            None => write!(f, "{:.3} (n/a)", self.mean),
        }
    }
}

/// Aggregate of one configuration over its repeats.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub configuration: String,
    pub runs: Vec<MetricPair>,
    pub mse: MeanStd,
    pub mape: MeanStd,
}

pub fn aggregate_repeats(configuration: impl Into<String>, runs: &[MetricPair]) -> Result<RunReport, EvalError> {
    let mse: Vec<f64> = runs.iter().map(|r| r.mse).collect();
    let mape: Vec<f64> = runs.iter().map(|r| r.mape).collect();
    Ok(RunReport {
        configuration: configuration.into(),
        runs: runs.to_vec(),
        mse: MeanStd::of(&mse).ok_or(EvalError::Empty)?,
        mape: MeanStd::of(&mape).ok_or(EvalError::Empty)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert_eq!(mape(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.0);
        assert_eq!(mape(&[4.0], &[5.0]).unwrap(), 0.25);
        assert_eq!(mape(&[3.0, 3.0], &[3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(mse(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch(1, 2)));
        assert_eq!(mse(&[], &[]), Err(EvalError::Empty));
        assert_eq!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(EvalError::ZeroLabel(1)));
    }

    #[test]
    fn aggregation() {
        let runs = |xs: &[f64]| {
            xs.iter()
                .map(|&x| MetricPair {
                    mse: x,
                    mape: x / 10.0,
                    n: 5,
                })
                .collect::<Vec<_>>()
        };
        let r = aggregate_repeats("k=3", &runs(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!((r.mse.mean, r.mse.std), (1.0, Some(0.0)));
        let r = aggregate_repeats("k=3", &runs(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!((r.mse.mean, r.mse.std), (2.0, Some(1.0)));
        let single = aggregate_repeats("k=0", &runs(&[0.7])).unwrap();
        assert_eq!(single.mse.mean, 0.7);
        assert_eq!(single.mse.to_string(), "0.700 (n/a)");
        let cell = MeanStd {
            mean: 0.762,
            std: Some(0.114),
        };
        assert_eq!(cell.to_string(), "0.762 (0.114)");
        assert!(aggregate_repeats("x", &[]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_and_scale_properties(
            pairs in proptest::collection::vec((1.0f64..7.0, 1.0f64..7.0), 1..50),
            c in 0.1f64..10.0,
            rot in 0usize..50,
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let yh: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = rot % y.len();
            let mut y2 = y.clone();
            let mut yh2 = yh.clone();
            y2.rotate_left(r);
            yh2.rotate_left(r);
            let base_mse = mse(&y, &yh).unwrap();
            prop_assert!((base_mse - mse(&y2, &yh2).unwrap()).abs() < 1e-12);
            prop_assert!((mape(&y, &yh).unwrap() - mape(&y2, &yh2).unwrap()).abs() < 1e-12);
            let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
            let yhs: Vec<f64> = yh.iter().map(|v| v * c).collect();
            prop_assert!((mse(&ys, &yhs).unwrap() - c * c * base_mse).abs() < 1e-9 * (1.0 + c * c * base_mse));
            prop_assert!((mape(&ys, &yhs).unwrap() - mape(&y, &yh).unwrap()).abs() < 1e-12);
        }
    }
}
