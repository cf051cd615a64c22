//! Baseline regressors: linear regression and gradient-boosted trees.

mod gbdt;
mod linear;
mod ols;
mod sweep;

pub use gbdt::{fit_gbdt, importance_gbdt, predict_gbdt, GbdtModel, GbdtParams, Node, Tree};
pub use linear::LinearRegressor;
pub use ols::{fit_ols, predict_ols, LinearModel, INTERCEPT};
pub use sweep::{fraction_sweep, ModelKind, SweepCell, SweepCurve, SweepPoint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("design is rank deficient; dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("too few rows: {rows} (need at least {needed})")]
    TooFewRows { rows: usize, needed: usize },
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}
