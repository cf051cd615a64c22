//! Accuracy as a function of the training fraction.

use rayon::prelude::*;
use serde::Serialize;

use super::{fit_gbdt, predict_gbdt, GbdtParams, LinearRegressor, ModelError};
use crate::dataset::{split_indices, FeatureMatrix};
use crate::evaluation::{evaluate, MeanStd, MetricPair};
use crate::util::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Gbdt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "lr",
            ModelKind::Gbdt => "gbdt",
        }
    }
}

/// Result of one (fraction, repeat) fit; `Err` carries the fit failure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub fraction: f64,
    pub repeat: usize,
    pub seed: u64,
    pub outcome: Result<MetricPair, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub mse: Option<MeanStd>,
    pub mape: Option<MeanStd>,
    pub ok: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCurve {
    pub model: ModelKind,
    pub cells: Vec<SweepCell>,
    pub points: Vec<SweepPoint>,
}

fn fit_and_score(
    kind: ModelKind,
    x: &FeatureMatrix,
    y: &[f64],
    train: &[usize],
    test: &[usize],
    gbdt: &GbdtParams,
) -> Result<MetricPair, ModelError> {
    let (xtr, xte) = (x.select_rows(train), x.select_rows(test));
    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let yte: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    let pred = match kind {
        ModelKind::Linear => LinearRegressor::fit(&xtr, &ytr)?.predict(&xte)?,
        ModelKind::Gbdt => predict_gbdt(&fit_gbdt(&xtr, &ytr, gbdt)?, &xte)?,
    };
    evaluate(&yte, &pred).map_err(|e| ModelError::Sweep(e.to_string()))
}

/// Fits `kind` on a random `fraction` of the rows and scores it on the rest,
/// `repeats` times per fraction with seeds derived from `seed`. Individual
/// fit failures are recorded in their cell and do not stop the sweep.
pub fn fraction_sweep(
    x: &FeatureMatrix,
    y: &[f64],
    fractions: &[f64],
    kind: ModelKind,
    seed: u64,
    repeats: usize,
    gbdt: &GbdtParams,
) -> Result<SweepCurve, ModelError> {
    if repeats == 0 {
        return Err(ModelError::Sweep("repeats must be at least 1".into()));
    }
    let mut jobs = Vec::new();
    for (fi, &f) in fractions.iter().enumerate() {
        for r in 0..repeats {
            let s = derive_seed(seed, &[fi as u64, r as u64]);
            let (train, test) = split_indices(x.rows(), f, s).map_err(|e| ModelError::Sweep(e.to_string()))?;
            jobs.push((f, r, s, train, test));
        }
    }
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|(f, r, s, train, test)| SweepCell {
            fraction: *f,
            repeat: *r,
            seed: *s,
            outcome: fit_and_score(kind, x, y, train, test, gbdt).map_err(|e| e.to_string()),
        })
        .collect();
    let points = fractions
        .iter()
        .map(|&f| {
            let ok: Vec<&MetricPair> = cells
                .iter()
                .filter(|c| c.fraction == f)
                .filter_map(|c| c.outcome.as_ref().ok())
                .collect();
            let mse: Vec<f64> = ok.iter().map(|m| m.mse).collect();
            let mape: Vec<f64> = ok.iter().map(|m| m.mape).collect();
            SweepPoint {
                fraction: f,
                mse: MeanStd::of(&mse),
                mape: MeanStd::of(&mape),
                ok: ok.len(),
                failed: repeats - ok.len(),
            }
        })
        .collect();
    Ok(SweepCurve {
        model: kind,
        cells,
        points,
    })
}
