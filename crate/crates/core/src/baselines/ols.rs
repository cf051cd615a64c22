//! Least squares via Householder QR with column pivoting.

use serde::Serialize;

use super::ModelError;
use crate::dataset::FeatureMatrix;

pub const INTERCEPT: &str = "(intercept)";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub columns: Vec<String>,
}

/// Column-major scratch copy of `[1 | X]`.
struct Design {
    n: usize,
    p: usize,
    a: Vec<f64>,
    names: Vec<String>,
}

impl Design {
    fn with_intercept(x: &FeatureMatrix) -> Self {
        let (n, p) = (x.rows(), x.cols() + 1);
        let mut a = vec![0.0; n * p];
        a[..n].fill(1.0);
        for j in 0..x.cols() {
            for i in 0..n {
                a[(j + 1) * n + i] = x.get(i, j);
            }
        }
        let mut names = vec![INTERCEPT.to_string()];
        names.extend(x.columns().iter().map(|c| c.name.clone()));
        Self { n, p, a, names }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.n..(j + 1) * self.n]
    }
}

/// Solves `min ||A b - y||` for full-column-rank `A` (column-major, `n x p`).
/// On rank deficiency returns the pivoted-out column indices instead.
fn pivoted_qr_solve(mut a: Vec<f64>, n: usize, p: usize, y: &[f64]) -> Result<Vec<f64>, Vec<usize>> {
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let norm_of = |a: &[f64], j: usize, from: usize| -> f64 {
        a[j * n + from..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let scale = (0..p).map(|j| norm_of(&a, j, 0)).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE) * (n.max(p) as f64).sqrt();

    let mut rank = p;
    for k in 0..p {
        let (best, best_norm) =
            (k..p)
                .map(|j| (j, norm_of(&a, j, k)))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best != k {
            for i in 0..n {
                a.swap(k * n + i, best * n + i);
            }
            perm.swap(k, best);
        }
        if best_norm <= tol {
            rank = k;
            break;
        }
        let x0 = a[k * n + k];
        let alpha = if x0 >= 0.0 { -best_norm } else { best_norm };
        let mut v: Vec<f64> = a[k * n + k..(k + 1) * n].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        if vtv > 0.0 {
            for j in k + 1..p {
                let col = &mut a[j * n + k..(j + 1) * n];
                let f = 2.0 * v.iter().zip(col.iter()).map(|(s, t)| s * t).sum::<f64>() / vtv;
                col.iter_mut().zip(&v).for_each(|(c, s)| *c -= f * s);
            }
            let f = 2.0 * v.iter().zip(&qty[k..]).map(|(s, t)| s * t).sum::<f64>() / vtv;
            qty[k..].iter_mut().zip(&v).for_each(|(c, s)| *c -= f * s);
        }
        a[k * n + k] = alpha;
        a[k * n + k + 1..(k + 1) * n].fill(0.0);
    }
    if rank < p {
        let mut dropped = perm[rank..].to_vec();
        dropped.sort_unstable();
        return Err(dropped);
    }
    let mut beta_perm = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|j| a[j * n + k] * beta_perm[j]).sum();
        beta_perm[k] = (qty[k] - s) / a[k * n + k];
    }
    let mut beta = vec![0.0; p];
    for (k, &j) in perm.iter().enumerate() {
        beta[j] = beta_perm[k];
    }
    Ok(beta)
}

/// Ordinary least squares with an intercept. Fails with the offending
/// column names when `[1 | X]` is rank deficient.
pub fn fit_ols(x: &FeatureMatrix, y: &[f64]) -> Result<LinearModel, ModelError> {
    if y.len() != x.rows() {
        return Err(ModelError::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() < x.cols() + 1 {
        return Err(ModelError::TooFewRows {
            rows: x.rows(),
            needed: x.cols() + 1,
        });
    }
    let design = Design::with_intercept(x);
    debug_assert_eq!(design.col(0).len(), design.n);
    let beta = pivoted_qr_solve(design.a.clone(), design.n, design.p, y).map_err(|cols| ModelError::RankDeficient {
        columns: cols.into_iter().map(|j| design.names[j].clone()).collect(),
    })?;
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        columns: design.names[1..].to_vec(),
    })
}

pub fn predict_ols(model: &LinearModel, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
    if x.cols() != model.coefficients.len() {
        return Err(ModelError::Shape(format!(
            "model has {} coefficients, matrix has {} columns",
            model.coefficients.len(),
            x.cols()
        )));
    }
    Ok((0..x.rows())
        .map(|i| {
            model.intercept
                + x.row(i)
                    .iter()
                    .zip(&model.coefficients)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect())
}
