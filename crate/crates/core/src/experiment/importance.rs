use super::sweep::{ask, ranked_support, split_for};
use super::tables::*;
use super::{streams, write_provenance, Context, ExperimentError, Outcome};
use crate::baselines::{fit_gbdt, importance_gbdt, GbdtParams};
use crate::derive_seed;
use crate::evaluation::{compare_importances, ImportanceVector, TTestOutcome};
use crate::prompting::render_importance;

/// Model names in report order.
pub const IMPORTANCE_MODELS: [&str; 3] = ["GBDT", "Zero-shot LLM", "Few-shot LLM"];

/// GBDT split-gain importances, zero-shot LLM importances and few-shot LLM
/// importances, one vector per repeat each, compared pairwise per variable
/// with Welch t-tests.
pub fn run_importance_study(ctx: &Context) -> Result<Outcome, ExperimentError> {
    let p = ctx.protocol();
    if p.repeats < 2 {
        return Err(ExperimentError::Config(
            "the importance study needs at least 2 repeats".into(),
        ));
    }
    let schema = ctx.dataset.schema();
    let names = schema.names();
    let y = ctx.dataset.labels();
    let mut art = ctx.artifacts()?;

    let mut gbdt = Vec::new();
    for r in 0..p.repeats {
        // The tree arm always resamples its training split.
        let (train, _) = crate::dataset::split_indices(
            ctx.dataset.len(),
            p.train_fraction,
            derive_seed(p.seed, &[streams::SPLIT, streams::GBDT, r as u64]),
        )?;
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let params = GbdtParams {
            seed: derive_seed(p.seed, &[streams::GBDT, r as u64]),
            ..ctx.config.gbdt.clone()
        };
        gbdt.push(importance_gbdt(&fit_gbdt(
            &ctx.encoded.select_rows(&train),
            &ytr,
            &params,
        )?));
    }

    let mut zero = Vec::new();
    let mut few = Vec::new();
    let zero_prompt = render_importance(&[], schema)?;
    for r in 0..p.repeats {
        let (train, test) = split_for(ctx, r)?;
        if p.importance_support > train.len() {
            return Err(ExperimentError::Config(format!(
                "importance_support {} exceeds the {} training records",
                p.importance_support,
                train.len()
            )));
        }
        let (_, support) = ranked_support(ctx, &train, &test, p.importance_support)?;
        let few_prompt = render_importance(support.members(), schema)?;
        for (tag, prompt, out) in [("zero", &zero_prompt, &mut zero), ("few", &few_prompt, &mut few)] {
            let file = format!("reasoning/importance/{tag}_r{}.txt", r + 1);
            match ask(ctx, prompt, r, Some(&names)) {
                Ok(b) => {
                    art.text(&file, &format!("{}\n", b.reasoning))?;
                    out.push(b.importances.expect("importance requested"));
                }
                Err((err, raw)) => {
                    log::warn!("importance repeat {} ({tag}-shot) failed: {err}", r + 1);
                    art.text(&file, &format!("FAILED: {err}\n{raw}\n"))?;
                }
            }
        }
    }

    let per_model: Vec<(String, Vec<ImportanceVector>)> = IMPORTANCE_MODELS
        .iter()
        .map(|m| m.to_string())
        .zip([gbdt, zero, few])
        .collect();
    let cmp = compare_importances(&per_model, &names)?;

    let label = |v: &str| schema.get(v).map_or(v.to_string(), |d| d.label.clone());
    let mut rows = Vec::new();
    for (vi, v) in names.iter().enumerate() {
        for (mi, m) in cmp.models.iter().enumerate() {
            rows.push(ImportanceRow {
                variable: v.clone(),
                label: label(v),
                model: m.clone(),
                values: cmp.repeats[mi][vi].clone(),
            });
        }
    }
    let tests: Vec<TestRow> = cmp
        .tests
        .iter()
        .map(|t| {
            let (tv, df, pv, outcome) = match t.result.outcome {
                TTestOutcome::Statistic { t, df, p } => (Some(t), Some(df), Some(p), "statistic"),
                TTestOutcome::Degenerate => (None, None, None, "degenerate"),
            };
            TestRow {
                variable: t.variable.clone(),
                label: label(&t.variable),
                model_a: t.model_a.clone(),
                model_b: t.model_b.clone(),
                t: tv,
                df,
                p: pv,
                outcome: outcome.into(),
                stars: t.result.stars().into(),
            }
        })
        .collect();
    art.csv(
        "importance.csv",
        IMPORTANCE_HEADER,
        &rows.iter().map(ImportanceRow::to_record).collect::<Vec<_>>(),
    )?;
    art.csv(
        "importance_tests.csv",
        TEST_HEADER,
        &tests.iter().map(TestRow::to_record).collect::<Vec<_>>(),
    )?;
    let summary = importance_summary(&rows, &tests, &cmp.models);
    art.text("importance_summary.txt", &summary)?;
    write_provenance(ctx, &mut art, "importance")?;
    Ok(art.finish(summary))
}
