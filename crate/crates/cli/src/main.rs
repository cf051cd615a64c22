use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use tsat_core::experiment;
use tsat_core::{Context, ExperimentConfig, MockSpec};

#[derive(Parser)]
#[command(name = "tsat", version, about = "Few-shot LLM prediction of travel satisfaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic survey CSV to <out>/synthetic_survey.csv.
    Synth,
    /// Zero-shot predictions over every record.
    Zeroshot,
    /// Support-size sweep with similarity-ranked support sets.
    Fewshot,
    /// Support-size sweep with random support sets and K-S checks.
    RandomFewshot,
    /// Linear regression and GBDT over growing training shares.
    BaselineSweep,
    /// GBDT, zero-shot and few-shot variable importances with t-tests.
    Importance,
    /// Rebuild report.txt from the tables in <out>.
    Report,
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Survey CSV to use instead of synthetic data.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Use the offline mock: nn1, linear, prior or constant.
    #[arg(long, global = true)]
    mock: Option<String>,
    /// Protocol seed (for `synth`, the data seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
}

fn build_config(o: &Overrides, synth: bool) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &o.data {
        c.data.path = Some(p.clone());
    }
    if let Some(m) = &o.mock {
        let mut spec: MockSpec = m.parse()?;
        if let Some(old) = &c.mock {
            spec.noise_sd = old.noise_sd;
            spec.seed = old.seed;
            spec.importance_jitter = old.importance_jitter;
        }
        c.mock = Some(spec);
    }
    if let Some(s) = o.seed {
        if synth {
            c.data.synthetic.seed = s;
        } else {
            c.protocol.seed = s;
        }
    }
    if let Some(d) = &o.out {
        c.output.out_dir = d.clone();
    }
    if let Some(d) = &o.cache {
        c.output.cache_dir = Some(d.clone());
    }
    if let Some(b) = o.batch_size {
        c.protocol.batch_size = b;
    }
    if let Some(t) = o.temperature {
        c.llm.temperature = t;
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let synth = matches!(cli.command, Command::Synth);
    let config = build_config(&cli.overrides, synth)?;
    let outcome = match cli.command {
        Command::Synth => {
            if config.data.path.is_some() {
                bail!("synth generates data; drop --data");
            }
            let dir = &config.output.out_dir;
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("synthetic_survey.csv");
            let n = experiment::write_synthetic(&config, &path)?;
            println!("wrote {n} records to {}", path.display());
            return Ok(());
        }
        Command::Report => experiment::render_report(&config.output.out_dir)?,
        Command::BaselineSweep => experiment::run_baseline_sweep(&Context::load(config, false)?)?,
        cmd => {
            let ctx = Context::load(config, true)?;
            let outcome = match cmd {
                Command::Zeroshot => experiment::run_zero_shot(&ctx)?,
                Command::Fewshot => experiment::run_few_shot_sweep(&ctx)?,
                Command::RandomFewshot => experiment::run_random_sweep(&ctx)?,
                Command::Importance => experiment::run_importance_study(&ctx)?,
                _ => unreachable!(),
            };
            let s = ctx.client().stats();
            log::info!(
                "llm requests {}, cache hits {}, transport calls {}, failures {}",
                s.requests,
                s.cache_hits,
                s.transport_calls,
                s.failures
            );
            outcome
        }
    };
    println!("{}", outcome.summary);
    for f in &outcome.files {
        log::debug!("wrote {}", f.display());
    }
    eprintln!("{} files written", outcome.files.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
