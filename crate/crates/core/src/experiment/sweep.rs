//! Support-size sweeps: zero-shot over the whole survey, similarity-ranked
//! few-shot, and randomly sampled few-shot with K-S checks.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::tables::*;
use super::{streams, write_provenance, Context, ExperimentError, Outcome};
use crate::dataset::{split_indices, Dataset, RespondentRecord};
use crate::derive_seed;
use crate::evaluation::{aggregate_repeats, evaluate, MetricPair};
use crate::prompting::{parse_response, render_few_shot, render_zero_shot, PredictionBatch, Prompt};
use crate::selection::{
    random_support, rank_support, representativeness_report, summarize_repeats, RepresentativenessReport,
    SupportProvenance, SupportSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// k = 0 over every record.
    WholeDataset,
    Ranked,
    Random,
}

impl Mode {
    fn command(self) -> &'static str {
        match self {
            Mode::WholeDataset => "zeroshot",
            Mode::Ranked => "fewshot",
            Mode::Random => "random-fewshot",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Mode::WholeDataset => "zeroshot",
            Mode::Ranked => "fewshot",
            Mode::Random => "random_fewshot",
        }
    }
}

struct Trial {
    k: usize,
    repeat: usize,
    support: SupportSet,
    queries: Vec<RespondentRecord>,
    ks: Option<RepresentativenessReport>,
}

/// Outcome of one (support size, repeat) trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub(crate) struct TrialRecord {
    pub support_size: usize,
    pub repeat: usize,
    pub support_ids: Vec<String>,
    pub metrics: Result<MetricPair, String>,
}

fn split_seed(ctx: &Context, repeat: usize) -> u64 {
    let p = ctx.protocol();
    let r = if p.vary_split { repeat as u64 } else { 0 };
    derive_seed(p.seed, &[streams::SPLIT, r])
}

/// Training pool and query records for one repeat.
pub(crate) fn split_for(ctx: &Context, repeat: usize) -> Result<(Vec<usize>, Vec<usize>), ExperimentError> {
    Ok(split_indices(
        ctx.dataset.len(),
        ctx.protocol().train_fraction,
        split_seed(ctx, repeat),
    )?)
}

pub(crate) fn ranked_support(
    ctx: &Context,
    train: &[usize],
    test: &[usize],
    k: usize,
) -> Result<(Dataset, SupportSet), ExperimentError> {
    let pool = ctx.dataset.subset(train);
    let support = rank_support(
        &pool,
        &ctx.encoded.select_rows(train),
        &ctx.encoded.select_rows(test),
        k,
    )?;
    Ok((pool, support))
}

fn build_trials(ctx: &Context, mode: Mode) -> Result<Vec<Trial>, ExperimentError> {
    let p = ctx.protocol();
    let sizes: Vec<usize> = if mode == Mode::WholeDataset {
        vec![0]
    } else {
        p.support_sizes.clone()
    };
    let mut trials = Vec::new();
    for repeat in 0..p.repeats {
        let (train, test) = if mode == Mode::WholeDataset {
            (Vec::new(), (0..ctx.dataset.len()).collect())
        } else {
            split_for(ctx, repeat)?
        };
        if let Some(&k) = sizes.iter().find(|&&k| k > train.len() && mode != Mode::WholeDataset) {
            return Err(ExperimentError::Config(format!(
                "support size {k} exceeds the {} training records",
                train.len()
            )));
        }
        let queries: Vec<RespondentRecord> = test.iter().map(|&i| ctx.dataset.records()[i].clone()).collect();
        for &k in &sizes {
            let (support, ks) = if k == 0 {
                (SupportSet::empty(SupportProvenance::SimilarityRanked), None)
            } else if mode == Mode::Ranked {
                (ranked_support(ctx, &train, &test, k)?.1, None)
            } else {
                let pool = ctx.dataset.subset(&train);
                let s = random_support(
                    &pool,
                    k,
                    derive_seed(p.seed, &[streams::RANDOM_SUPPORT, k as u64, repeat as u64]),
                )?;
                let report = representativeness_report(&s, &ctx.dataset)?;
                (s, Some(report))
            };
            let qids: HashSet<&str> = queries.iter().map(|r| r.id.as_str()).collect();
            let shared: Vec<String> = support.ids().filter(|id| qids.contains(id)).map(String::from).collect();
            if !shared.is_empty() {
                return Err(ExperimentError::Leakage { k, repeat, ids: shared });
            }
            trials.push(Trial {
                k,
                repeat,
                support,
                queries: queries.clone(),
                ks,
            });
        }
    }
    Ok(trials)
}

/// Sends one prompt, re-asking with a fresh trial index when the reply
/// does not parse. Returns the parsed batch or the last error and raw text.
pub(crate) fn ask(
    ctx: &Context,
    prompt: &Prompt,
    repeat: usize,
    names: Option<&[String]>,
) -> Result<PredictionBatch, (String, String)> {
    let mut last = (String::new(), String::new());
    for attempt in 0..=ctx.protocol().parse_retries {
        let trial_index = repeat as u64 | (u64::from(attempt) << 32);
        let text = ctx
            .client()
            .complete(prompt, trial_index)
            .map_err(|e| (e.to_string(), String::new()))?;
        match parse_response(&text, &prompt.query_ids, names) {
            Ok(b) => return Ok(b),
            Err(e) => {
                log::warn!("unparseable response (attempt {}): {}", attempt + 1, e.kind);
                last = (e.to_string(), text);
            }
        }
    }
    Err(last)
}

fn run(ctx: &Context, mode: Mode) -> Result<Outcome, ExperimentError> {
    let trials = build_trials(ctx, mode)?;
    let schema = ctx.dataset.schema();
    let batch_size = ctx.protocol().batch_size;

    let mut jobs: Vec<(usize, usize, Prompt)> = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (b, chunk) in trial.queries.chunks(batch_size).enumerate() {
            let prompt = if trial.k == 0 {
                render_zero_shot(chunk, schema, false)?
            } else {
                render_few_shot(&trial.support, chunk, schema, false)?
            };
            jobs.push((t, b, prompt));
        }
    }
    let answers: Vec<Result<PredictionBatch, (String, String)>> = jobs
        .par_iter()
        .map(|(t, _, prompt)| ask(ctx, prompt, trials[*t].repeat, None))
        .collect();

    let mut art = ctx.artifacts()?;
    let stem = mode.stem();
    let mut per_trial: Vec<Vec<&Result<PredictionBatch, (String, String)>>> = vec![Vec::new(); trials.len()];
    for ((t, b, _), answer) in jobs.iter().zip(&answers) {
        let trial = &trials[*t];
        let body = match answer {
            Ok(batch) => format!("{}\n", batch.reasoning),
            Err((err, raw)) => format!("FAILED: {err}\n{raw}\n"),
        };
        art.text(
            &format!(
                "reasoning/{stem}/k{:02}_r{}_b{:03}.txt",
                trial.k,
                trial.repeat + 1,
                b + 1
            ),
            &body,
        )?;
        per_trial[*t].push(answer);
    }

    let records: Vec<TrialRecord> = trials
        .iter()
        .zip(&per_trial)
        .map(|(trial, answers)| {
            let metrics = match answers.iter().find_map(|a| a.as_ref().err()) {
                Some((err, _)) => Err(err.clone()),
                None => {
                    let y: Vec<f64> = trial.queries.iter().map(|r| r.satisfaction).collect();
                    let yhat: Vec<f64> = trial
                        .queries
                        .iter()
                        .map(|r| {
                            answers
                                .iter()
                                .find_map(|a| a.as_ref().ok().and_then(|b| b.scores.get(&r.id)))
                                .copied()
                                .expect("parsed batches cover their ids")
                        })
                        .collect();
                    evaluate(&y, &yhat).map_err(|e| e.to_string())
                }
            };
            TrialRecord {
                support_size: trial.k,
                repeat: trial.repeat,
                support_ids: trial.support.ids().map(String::from).collect(),
                metrics,
            }
        })
        .collect();

    let sizes: Vec<usize> = if mode == Mode::WholeDataset {
        vec![0]
    } else {
        ctx.protocol().support_sizes.clone()
    };
    let mut rows = Vec::new();
    for &k in &sizes {
        let ok: Vec<MetricPair> = records
            .iter()
            .filter(|r| r.support_size == k)
            .filter_map(|r| r.metrics.clone().ok())
            .collect();
        let failed = records
            .iter()
            .filter(|r| r.support_size == k && r.metrics.is_err())
            .count();
        let report = (!ok.is_empty())
            .then(|| aggregate_repeats(k.to_string(), &ok))
            .transpose()?;
        let ks = match mode {
            Mode::Random if k > 0 => {
                let reports: Vec<RepresentativenessReport> = trials
                    .iter()
                    .filter(|t| t.k == k)
                    .filter_map(|t| t.ks.clone())
                    .collect();
                Some(summarize_repeats(&reports, schema))
            }
            Mode::Random => Some(NO_KS.to_string()),
            _ => None,
        };
        rows.push(SweepRow {
            support_size: k,
            label: match (mode, k) {
                (Mode::WholeDataset, _) => "zero-shot (all records)".into(),
                (_, 0) => ZERO_SHOT_LABEL.into(),
                _ => k.to_string(),
            },
            ks,
            runs: ok.len(),
            failed,
            mse: report.as_ref().map(|r| r.mse),
            mape: report.as_ref().map(|r| r.mape),
        });
    }

    art.csv(
        &format!("{stem}.csv"),
        SWEEP_HEADER,
        &rows.iter().map(SweepRow::to_record).collect::<Vec<_>>(),
    )?;
    let trial_rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let (status, n, mse, mape, err) = match &r.metrics {
                Ok(m) => (
                    "ok",
                    m.n.to_string(),
                    m.mse.to_string(),
                    m.mape.to_string(),
                    String::new(),
                ),
                Err(e) => ("failed", String::new(), String::new(), String::new(), e.clone()),
            };
            vec![
                r.support_size.to_string(),
                (r.repeat + 1).to_string(),
                status.into(),
                n,
                mse,
                mape,
                r.support_ids.join(";"),
                err,
            ]
        })
        .collect();
    art.csv(
        &format!("{stem}_trials.csv"),
        &[
            "support_size",
            "repeat",
            "status",
            "n",
            "mse",
            "mape",
            "support_ids",
            "error",
        ],
        &trial_rows,
    )?;
    if mode == Mode::Random {
        let mut ks_rows = Vec::new();
        for t in trials.iter().filter(|t| t.ks.is_some()) {
            for r in &t.ks.as_ref().unwrap().results {
                ks_rows.push(vec![
                    t.k.to_string(),
                    (t.repeat + 1).to_string(),
                    r.variable.clone(),
                    r.statistic.to_string(),
                    r.p_value.to_string(),
                    r.stars().to_string(),
                ]);
            }
        }
        art.csv(
            &format!("{stem}_ks.csv"),
            &["support_size", "repeat", "variable", "d", "p", "stars"],
            &ks_rows,
        )?;
    }
    let title = match mode {
        Mode::WholeDataset => "Zero-shot prediction accuracy on all records",
        Mode::Ranked => "Prediction accuracy of the few-shot method (similarity-ranked support sets)",
        Mode::Random => "K-S test and prediction accuracy under random sampling",
    };
    let summary = sweep_summary(title, &rows);
    art.text(&format!("{stem}_summary.txt"), &summary)?;
    write_provenance(ctx, &mut art, mode.command())?;
    Ok(art.finish(summary))
}

/// Zero-shot predictions for every record, repeated.
pub fn run_zero_shot(ctx: &Context) -> Result<Outcome, ExperimentError> {
    run(ctx, Mode::WholeDataset)
}

/// Support-size sweep with similarity-ranked support sets; k = 0 uses the
/// same query records as the other sizes.
pub fn run_few_shot_sweep(ctx: &Context) -> Result<Outcome, ExperimentError> {
    run(ctx, Mode::Ranked)
}

/// Support-size sweep with uniformly sampled support sets, each checked
/// against the full survey with K-S tests.
pub fn run_random_sweep(ctx: &Context) -> Result<Outcome, ExperimentError> {
    run(ctx, Mode::Random)
}
