//! Row types shared by the drivers and the `report` command, with their
//! CSV columns and plain-text rendering.

use std::collections::HashMap;
use std::path::Path;

use super::ExperimentError;
use crate::evaluation::MeanStd;

pub const ZERO_SHOT_LABEL: &str = "0 (zero-shot)";
/// K-S cell for rows without a support set.
pub const NO_KS: &str = "\\";

/// One support size of a prediction sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub support_size: usize,
    pub label: String,
    pub ks: Option<String>,
    pub runs: usize,
    pub failed: usize,
    pub mse: Option<MeanStd>,
    pub mape: Option<MeanStd>,
}

/// One (model, training fraction) point of a baseline sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub model: String,
    pub fraction: f64,
    pub runs: usize,
    pub failed: usize,
    pub mse: Option<MeanStd>,
    pub mape: Option<MeanStd>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceRow {
    pub variable: String,
    pub label: String,
    pub model: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestRow {
    pub variable: String,
    pub label: String,
    pub model_a: String,
    pub model_b: String,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub outcome: String,
    pub stars: String,
}

pub const SWEEP_HEADER: &[&str] = &[
    "support_size",
    "label",
    "ks",
    "runs",
    "failed",
    "mse_mean",
    "mse_std",
    "mape_mean",
    "mape_std",
];
pub const BASELINE_HEADER: &[&str] = &[
    "model",
    "fraction",
    "runs",
    "failed",
    "mse_mean",
    "mse_std",
    "mape_mean",
    "mape_std",
];
pub const IMPORTANCE_HEADER: &[&str] = &["variable", "label", "model", "mean", "values"];
pub const TEST_HEADER: &[&str] = &[
    "variable", "label", "model_a", "model_b", "t", "df", "p", "outcome", "stars",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn ms_cells(m: Option<MeanStd>) -> [String; 2] {
    [opt(m.map(|m| m.mean)), opt(m.and_then(|m| m.std))]
}

fn cell(m: Option<MeanStd>, failed: usize) -> String {
    match (m, failed) {
        (None, _) => "failed".into(),
        (Some(m), 0) => m.to_string(),
        (Some(m), f) => format!("{m} [{f} failed]"),
    }
}

impl SweepRow {
    pub fn to_record(&self) -> Vec<String> {
        let [a, b] = ms_cells(self.mse);
        let [c, d] = ms_cells(self.mape);
        vec![
            self.support_size.to_string(),
            self.label.clone(),
            self.ks.clone().unwrap_or_default(),
            self.runs.to_string(),
            self.failed.to_string(),
            a,
            b,
            c,
            d,
        ]
    }
}

impl BaselineRow {
    pub fn to_record(&self) -> Vec<String> {
        let [a, b] = ms_cells(self.mse);
        let [c, d] = ms_cells(self.mape);
        vec![
            self.model.clone(),
            self.fraction.to_string(),
            self.runs.to_string(),
            self.failed.to_string(),
            a,
            b,
            c,
            d,
        ]
    }
}

impl ImportanceRow {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn to_record(&self) -> Vec<String> {
        let values: Vec<String> = self.values.iter().map(f64::to_string).collect();
        vec![
            self.variable.clone(),
            self.label.clone(),
            self.model.clone(),
            self.mean().to_string(),
            values.join(";"),
        ]
    }
}

impl TestRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.variable.clone(),
            self.label.clone(),
            self.model_a.clone(),
            self.model_b.clone(),
            opt(self.t),
            opt(self.df),
            opt(self.p),
            self.outcome.clone(),
            self.stars.clone(),
        ]
    }
}

/// Left-aligned columns separated by two spaces.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                s.push_str(&format!("{c:<w$}  ", w = width[i]));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn sweep_summary(title: &str, rows: &[SweepRow]) -> String {
    let with_ks = rows.iter().any(|r| r.ks.is_some());
    let mut header = vec!["Support set size"];
    if with_ks {
        header.push("K-S test");
    }
    header.extend(["MSE", "MAPE"]);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.label.clone()];
            if with_ks {
                c.push(r.ks.clone().unwrap_or_else(|| NO_KS.into()));
            }
            c.push(cell(r.mse, r.failed));
            c.push(cell(r.mape, r.failed));
            c
        })
        .collect();
    format!("{title}\n\n{}", text_table(&header, &body))
}

pub fn baseline_summary(rows: &[BaselineRow]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut fractions: Vec<f64> = Vec::new();
    for r in rows {
        if !fractions.contains(&r.fraction) {
            fractions.push(r.fraction);
        }
    }
    let names: Vec<String> = models
        .iter()
        .flat_map(|m| {
            [
                format!("{} MSE", m.to_uppercase()),
                format!("{} MAPE", m.to_uppercase()),
            ]
        })
        .collect();
    let mut header = vec!["Training share"];
    header.extend(names.iter().map(String::as_str));
    let body: Vec<Vec<String>> = fractions
        .iter()
        .map(|&f| {
            let mut c = vec![format!("{:.0}%", f * 100.0)];
            for m in &models {
                match rows.iter().find(|r| r.model == *m && r.fraction == f) {
                    Some(r) => {
                        c.push(cell(r.mse, r.failed));
                        c.push(cell(r.mape, r.failed));
                    }
                    None => c.extend(["".into(), "".into()]),
                }
            }
            c
        })
        .collect();
    format!(
        "Baseline accuracy by share of records used for training\n\n{}",
        text_table(&header, &body)
    )
}

pub fn importance_summary(rows: &[ImportanceRow], tests: &[TestRow], models: &[String]) -> String {
    let pairs: Vec<(String, String)> = models
        .iter()
        .enumerate()
        .flat_map(|(i, a)| models[i + 1..].iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let pair_names: Vec<String> = pairs.iter().map(|(a, b)| format!("{a} vs {b}")).collect();
    let mut header = vec!["Variable"];
    header.extend(models.iter().map(String::as_str));
    header.extend(pair_names.iter().map(String::as_str));
    let mut variables: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        if !variables.iter().any(|(v, _)| *v == r.variable) {
            variables.push((&r.variable, &r.label));
        }
    }
    let body: Vec<Vec<String>> = variables
        .iter()
        .map(|(v, label)| {
            let mut c = vec![label.to_string()];
            for m in models {
                c.push(
                    rows.iter()
                        .find(|r| r.variable == *v && &r.model == m)
                        .map(|r| format!("{:.3}", r.mean()))
                        .unwrap_or_default(),
                );
            }
            for (a, b) in &pairs {
                let t = tests
                    .iter()
                    .find(|t| t.variable == *v && &t.model_a == a && &t.model_b == b);
                c.push(match t {
                    None => String::new(),
                    Some(t) if t.outcome == "degenerate" => "degenerate".into(),
                    Some(t) if t.stars.is_empty() => "ns".into(),
                    Some(t) => t.stars.clone(),
                });
            }
            c
        })
        .collect();
    format!(
        "Normalized variable importance (mean over repeats) and Welch t-tests\n\n{}\n* p < 0.05, ** p < 0.01, ns not significant\n",
        text_table(&header, &body)
    )
}

/// Reads a report CSV, skipping `#` lines, as maps keyed by header.
pub fn read_csv(path: &Path) -> Result<Vec<HashMap<String, String>>, ExperimentError> {
    let bad = |reason: String| ExperimentError::Report {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| bad(e.to_string()))?;
            Ok(header.iter().cloned().zip(r.iter().map(String::from)).collect())
        })
        .collect()
}

fn field<'a>(row: &'a HashMap<String, String>, key: &str, path: &Path) -> Result<&'a str, ExperimentError> {
    row.get(key).map(String::as_str).ok_or_else(|| ExperimentError::Report {
        path: path.to_path_buf(),
        reason: format!("missing column `{key}`"),
    })
}

fn num<T: std::str::FromStr>(row: &HashMap<String, String>, key: &str, path: &Path) -> Result<T, ExperimentError> {
    field(row, key, path)?.parse().map_err(|_| ExperimentError::Report {
        path: path.to_path_buf(),
        reason: format!("column `{key}` is not a number"),
    })
}

fn opt_num(row: &HashMap<String, String>, key: &str, path: &Path) -> Result<Option<f64>, ExperimentError> {
    let s = field(row, key, path)?;
    if s.is_empty() {
        Ok(None)
    } else {
        num(row, key, path).map(Some)
    }
}

fn mean_std(row: &HashMap<String, String>, prefix: &str, path: &Path) -> Result<Option<MeanStd>, ExperimentError> {
    Ok(opt_num(row, &format!("{prefix}_mean"), path)?.map(|mean| MeanStd {
        mean,
        std: opt_num(row, &format!("{prefix}_std"), path).ok().flatten(),
    }))
}

pub fn read_sweep_rows(path: &Path) -> Result<Vec<SweepRow>, ExperimentError> {
    read_csv(path)?
        .iter()
        .map(|r| {
            let ks = field(r, "ks", path)?;
            Ok(SweepRow {
                support_size: num(r, "support_size", path)?,
                label: field(r, "label", path)?.to_string(),
                ks: (!ks.is_empty()).then(|| ks.to_string()),
                runs: num(r, "runs", path)?,
                failed: num(r, "failed", path)?,
                mse: mean_std(r, "mse", path)?,
                mape: mean_std(r, "mape", path)?,
            })
        })
        .collect()
}

pub fn read_baseline_rows(path: &Path) -> Result<Vec<BaselineRow>, ExperimentError> {
    read_csv(path)?
        .iter()
        .map(|r| {
            Ok(BaselineRow {
                model: field(r, "model", path)?.to_string(),
                fraction: num(r, "fraction", path)?,
                runs: num(r, "runs", path)?,
                failed: num(r, "failed", path)?,
                mse: mean_std(r, "mse", path)?,
                mape: mean_std(r, "mape", path)?,
            })
        })
        .collect()
}

pub fn read_importance_rows(path: &Path) -> Result<Vec<ImportanceRow>, ExperimentError> {
    read_csv(path)?
        .iter()
        .map(|r| {
            let values = field(r, "values", path)?
                .split(';')
                .map(|v| {
                    v.parse().map_err(|_| ExperimentError::Report {
                        path: path.to_path_buf(),
                        reason: format!("bad importance value `{v}`"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            Ok(ImportanceRow {
                variable: field(r, "variable", path)?.to_string(),
                label: field(r, "label", path)?.to_string(),
                model: field(r, "model", path)?.to_string(),
                values,
            })
        })
        .collect()
}

pub fn read_test_rows(path: &Path) -> Result<Vec<TestRow>, ExperimentError> {
    read_csv(path)?
        .iter()
        .map(|r| {
            Ok(TestRow {
                variable: field(r, "variable", path)?.to_string(),
                label: field(r, "label", path)?.to_string(),
                model_a: field(r, "model_a", path)?.to_string(),
                model_b: field(r, "model_b", path)?.to_string(),
                t: opt_num(r, "t", path)?,
                df: opt_num(r, "df", path)?,
                p: opt_num(r, "p", path)?,
                outcome: field(r, "outcome", path)?.to_string(),
                stars: field(r, "stars", path)?.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_table_shape() {
        let rows = vec![
            SweepRow {
                support_size: 0,
                label: ZERO_SHOT_LABEL.into(),
                ks: None,
                runs: 3,
                failed: 0,
                mse: Some(MeanStd {
                    mean: 1.633,
                    std: Some(0.125),
                }),
                mape: Some(MeanStd {
                    mean: 0.241,
                    std: Some(0.034),
                }),
            },
            SweepRow {
                support_size: 6,
                label: "6".into(),
                ks: Some("Public transit station* (1)".into()),
                runs: 2,
                failed: 1,
                mse: Some(MeanStd {
                    mean: 0.73,
                    std: Some(0.003),
                }),
                mape: None,
            },
        ];
        let s = sweep_summary("T", &rows);
        assert!(s.contains("Support set size  K-S test"));
        assert!(
            s.contains("0 (zero-shot)     \\                            1.633 (0.125)             0.241 (0.034)"),
            "{s}"
        );
        assert!(s.contains("0.730 (0.003) [1 failed]  failed"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let row = SweepRow {
            support_size: 3,
            label: "3".into(),
            ks: Some("ns".into()),
            runs: 1,
            failed: 2,
            mse: Some(MeanStd {
                mean: 0.1 + 0.2,
                std: None,
            }),
            mape: None,
        };
        let mut art = super::super::Artifacts::new(dir.path(), "abc").unwrap();
        art.csv("t.csv", SWEEP_HEADER, &[row.to_record()]).unwrap();
        assert_eq!(read_sweep_rows(&dir.path().join("t.csv")).unwrap(), vec![row]);
    }
}
