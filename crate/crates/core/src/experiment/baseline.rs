use super::tables::*;
use super::{streams, write_provenance, Context, ExperimentError, Outcome};
use crate::baselines::{fraction_sweep, ModelKind, SweepCurve};
use crate::derive_seed;

/// Gnuplot script drawing MSE and MAPE against the training share from
/// `baseline_sweep.csv`.
pub(crate) const GNUPLOT: &str = r##"set datafile separator ","
set datafile commentschars "#"
set key autotitle columnhead
set xlabel "Share of records used for training"
set terminal pngcairo size 1000,400
set output "baseline_sweep.png"
set multiplot layout 1,2
set ylabel "MSE"
plot "< grep -v '^#' baseline_sweep.csv | awk -F, 'NR==1 || $1==\"lr\"'" using 2:5 with linespoints title "LR", \
     "< grep -v '^#' baseline_sweep.csv | awk -F, 'NR==1 || $1==\"gbdt\"'" using 2:5 with linespoints title "GBDT"
set ylabel "MAPE"
plot "< grep -v '^#' baseline_sweep.csv | awk -F, 'NR==1 || $1==\"lr\"'" using 2:7 with linespoints title "LR", \
     "< grep -v '^#' baseline_sweep.csv | awk -F, 'NR==1 || $1==\"gbdt\"'" using 2:7 with linespoints title "GBDT"
unset multiplot
"##;

fn rows(curve: &SweepCurve) -> Vec<BaselineRow> {
    curve
        .points
        .iter()
        .map(|p| BaselineRow {
            model: curve.model.as_str().to_string(),
            fraction: p.fraction,
            runs: p.ok,
            failed: p.failed,
            mse: p.mse,
            mape: p.mape,
        })
        .collect()
}

/// Linear regression and GBDT fitted on growing shares of the survey and
/// scored on the remaining records. Individual fit failures become gaps.
pub fn run_baseline_sweep(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let p = ctx.protocol();
    let y = ctx.dataset.labels();
    let seed = derive_seed(p.seed, &[streams::BASELINE]);
    let mut all_rows = Vec::new();
    let mut cells = Vec::new();
    for kind in [ModelKind::Linear, ModelKind::Gbdt] {
        let curve = fraction_sweep(&ctx.encoded, &y, &p.fractions, kind, seed, p.repeats, &ctx.config.gbdt)?;
        for c in &curve.cells {
            let (status, mse, mape, err) = match &c.outcome {
                Ok(m) => ("ok", m.mse.to_string(), m.mape.to_string(), String::new()),
                Err(e) => ("failed", String::new(), String::new(), e.clone()),
            };
            cells.push(vec![
                kind.as_str().to_string(),
                c.fraction.to_string(),
                (c.repeat + 1).to_string(),
                c.seed.to_string(),
                status.to_string(),
                mse,
                mape,
                err,
            ]);
        }
        all_rows.extend(rows(&curve));
    }
    let mut art = ctx.artifacts()?;
    art.csv(
        "baseline_sweep.csv",
        BASELINE_HEADER,
        &all_rows.iter().map(BaselineRow::to_record).collect::<Vec<_>>(),
    )?;
    art.csv(
        "baseline_sweep_cells.csv",
        &[
            "model",
            "fraction",
            "repeat",
            "split_seed",
            "status",
            "mse",
            "mape",
            "error",
        ],
        &cells,
    )?;
    art.text("baseline_sweep.gp", GNUPLOT)?;
    let summary = baseline_summary(&all_rows);
    art.text("baseline_sweep_summary.txt", &summary)?;
    write_provenance(ctx, &mut art, "baseline-sweep")?;
    Ok(art.finish(summary))
}
