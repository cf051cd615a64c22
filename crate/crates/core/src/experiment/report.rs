use std::fs;
use std::path::Path;

use super::importance::IMPORTANCE_MODELS;
use super::tables::*;
use super::{Artifacts, ExperimentError, Outcome};

fn config_line(path: &Path) -> Result<String, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    Ok(text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# config "))
        .unwrap_or("unknown")
        .to_string())
}

/// Rebuilds every summary from the tables found in `out_dir` and writes
/// them together to `report.txt`.
pub fn render_report(out_dir: &Path) -> Result<Outcome, ExperimentError> {
    let mut sections = Vec::new();
    let mut hashes: Vec<String> = Vec::new();
    let mut note = |path: &Path| -> Result<(), ExperimentError> {
        let h = config_line(path)?;
        if !hashes.contains(&h) {
            hashes.push(h);
        }
        Ok(())
    };
    let sweeps = [
        ("zeroshot.csv", "Zero-shot prediction accuracy on all records"),
        (
            "fewshot.csv",
            "Prediction accuracy of the few-shot method (similarity-ranked support sets)",
        ),
        (
            "random_fewshot.csv",
            "K-S test and prediction accuracy under random sampling",
        ),
    ];
    for (file, title) in sweeps {
        let path = out_dir.join(file);
        if path.exists() {
            note(&path)?;
            sections.push(sweep_summary(title, &read_sweep_rows(&path)?));
        }
    }
    let path = out_dir.join("baseline_sweep.csv");
    if path.exists() {
        note(&path)?;
        sections.push(baseline_summary(&read_baseline_rows(&path)?));
    }
    let path = out_dir.join("importance.csv");
    if path.exists() {
        note(&path)?;
        let rows = read_importance_rows(&path)?;
        let tests = read_test_rows(&out_dir.join("importance_tests.csv"))?;
        let mut models: Vec<String> = IMPORTANCE_MODELS.iter().map(|m| m.to_string()).collect();
        models.retain(|m| rows.iter().any(|r| &r.model == m));
        sections.push(importance_summary(&rows, &tests, &models));
    }
    if sections.is_empty() {
        return Err(ExperimentError::Report {
            path: out_dir.to_path_buf(),
            reason: "no result tables found".into(),
        });
    }
    let label = if hashes.len() == 1 {
        hashes[0].clone()
    } else {
        "mixed".into()
    };
    let mut art = Artifacts::new(out_dir, &label)?;
    let mut body = String::new();
    if hashes.len() > 1 {
        body.push_str(&format!(
            "# tables come from {} configurations: {}\n",
            hashes.len(),
            hashes.join(", ")
        ));
    }
    body.push_str(&sections.join("\n\n"));
    art.text("report.txt", &body)?;
    Ok(art.finish(body))
}
