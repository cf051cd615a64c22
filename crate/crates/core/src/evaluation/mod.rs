//! Accuracy metrics, repeat aggregation and significance tests.

mod importance;
mod metrics;
mod ttest;

pub use importance::{compare_importances, ImportanceComparison, ImportanceVector, PairTest};
pub use metrics::{aggregate_repeats, evaluate, mape, mse, MeanStd, MetricPair, RunReport};
pub use ttest::{welch_t, TTestOutcome, TTestResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("no observations")]
    Empty,
    #[error("MAPE undefined: label at position {0} is zero")]
    ZeroLabel(usize),
    #[error("t-test needs at least 2 observations per group ({0} and {1} given)")]
    TooFewObservations(usize, usize),
    #[error("importance vector for `{model}` lacks variable `{variable}`")]
    MissingVariable { model: String, variable: String },
    #[error("model `{0}` has fewer than 2 repeats")]
    TooFewRepeats(String),
    #[error("invalid importance vector: {0}")]
    InvalidImportance(String),
}

/// `**` below 0.01, `*` below 0.05, empty otherwise.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn star_thresholds() {
        assert_eq!(super::stars(0.2), "");
        assert_eq!(super::stars(0.05), "");
        assert_eq!(super::stars(0.049), "*");
        assert_eq!(super::stars(0.0099), "**");
    }
}
