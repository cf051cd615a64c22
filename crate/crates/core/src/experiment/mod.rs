//! Experiment drivers: prediction sweeps over support sizes, baseline
//! training-fraction sweeps and the importance study, with their report
//! files.

mod baseline;
mod config;
mod importance;
mod report;
mod sweep;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::baselines::ModelError;
use crate::dataset::{
    encode_dataset, fit_encoding, load_survey, synthesize, write_survey, Dataset, DatasetError, FeatureMatrix,
    MarginalSpec, VariableSchema,
};
use crate::evaluation::EvalError;
use crate::llm::{Backend, HttpBackend, LlmClient, LlmError, MockBackend, ResponseCache};
use crate::prompting::PromptError;
use crate::selection::SelectionError;
use crate::util::sha256_hex;

pub use baseline::run_baseline_sweep;
pub use config::{DataConfig, ExperimentConfig, OutputConfig, ProtocolConfig};
pub use importance::{run_importance_study, IMPORTANCE_MODELS};
pub use report::render_report;
pub use sweep::{run_few_shot_sweep, run_random_sweep, run_zero_shot};
pub use tables::{BaselineRow, SweepRow, ZERO_SHOT_LABEL};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("support and query sets overlap in trial k={k}, repeat {repeat}: {}", ids.join(", "))]
    Leakage { k: usize, repeat: usize, ids: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report file {path}: {reason}")]
    Report { path: PathBuf, reason: String },
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Seed streams drawn from the protocol seed.
pub(crate) mod streams {
    pub const SPLIT: u64 = 1;
    pub const RANDOM_SUPPORT: u64 = 2;
    pub const GBDT: u64 = 3;
    pub const BASELINE: u64 = 4;
}

/// Loaded data plus the LLM client, shared by the drivers.
pub struct Context {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub dataset: Dataset,
    pub marginals: MarginalSpec,
    pub encoded: FeatureMatrix,
    client: Option<LlmClient>,
}

pub fn load_schema(config: &ExperimentConfig) -> Result<Arc<VariableSchema>, ExperimentError> {
    Ok(Arc::new(match &config.data.schema {
        Some(p) => VariableSchema::from_path(p)?,
        None => VariableSchema::default_survey(),
    }))
}

pub fn load_marginals(config: &ExperimentConfig) -> Result<MarginalSpec, ExperimentError> {
    Ok(match &config.data.marginals {
        Some(p) => MarginalSpec::from_path(p)?,
        None => MarginalSpec::default_survey(),
    })
}

/// The survey named by the config, or the synthetic one it describes.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset, ExperimentError> {
    let schema = load_schema(config)?;
    match &config.data.path {
        Some(p) => Ok(load_survey(p, schema)?),
        None => Ok(synthesize(schema, &load_marginals(config)?, &config.data.synthetic)?),
    }
}

impl Context {
    /// Loads and encodes the data. The LLM client is built only when
    /// `with_llm` is set: the mock when the config names one, otherwise the
    /// HTTP backend.
    pub fn load(config: ExperimentConfig, with_llm: bool) -> Result<Self, ExperimentError> {
        let mut ctx = Self::data_only(config)?;
        if with_llm {
            let backend: Arc<dyn Backend> = match &ctx.config.mock {
                Some(spec) => Arc::new(MockBackend::new(
                    ctx.dataset.schema_arc(),
                    &ctx.marginals,
                    spec.clone(),
                )?),
                None => Arc::new(HttpBackend::from_env(&ctx.config.llm)?),
            };
            ctx.attach(backend)?;
        }
        Ok(ctx)
    }

    /// Like [`Context::load`] with a caller-supplied backend.
    pub fn with_backend(config: ExperimentConfig, backend: Arc<dyn Backend>) -> Result<Self, ExperimentError> {
        let mut ctx = Self::data_only(config)?;
        ctx.attach(backend)?;
        Ok(ctx)
    }

    fn data_only(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let dataset = load_dataset(&config)?;
        if dataset.len() < 2 {
            return Err(ExperimentError::Config(format!(
                "dataset has {} usable records",
                dataset.len()
            )));
        }
        let marginals = load_marginals(&config)?;
        let encoded = encode_dataset(&dataset, &fit_encoding(&dataset)?)?;
        Ok(Self {
            config_hash: config.hash(),
            config,
            dataset,
            marginals,
            encoded,
            client: None,
        })
    }

    fn attach(&mut self, backend: Arc<dyn Backend>) -> Result<(), ExperimentError> {
        let cache = self
            .config
            .output
            .cache_dir
            .as_ref()
            .map(ResponseCache::open)
            .transpose()?;
        self.client = Some(LlmClient::new(backend, self.config.llm.clone(), cache)?);
        Ok(())
    }

    pub fn client(&self) -> &LlmClient {
        self.client.as_ref().expect("context was loaded without an LLM client")
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.out_dir
    }

    pub(crate) fn protocol(&self) -> &ProtocolConfig {
        &self.config.protocol
    }

    pub(crate) fn artifacts(&self) -> Result<Artifacts, ExperimentError> {
        Artifacts::new(self.out_dir(), &self.config_hash)
    }

    fn data_hash(&self) -> String {
        let mut buf = Vec::new();
        write_survey(&self.dataset, &mut buf).expect("in-memory write");
        sha256_hex(&buf)
    }
}

/// Files written by one command plus its rendered summary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Writes report files under one directory. Every file starts with a
/// `# config <hash>` line.
pub(crate) struct Artifacts {
    dir: PathBuf,
    hash: String,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub(crate) fn new(dir: &Path, hash: &str) -> Result<Self, ExperimentError> {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
            files: Vec::new(),
        })
    }

    pub(crate) fn text(&mut self, name: &str, body: &str) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
        }
        fs::write(&path, format!("# config {}\n{body}", self.hash)).map_err(|e| ExperimentError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    pub(crate) fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| ExperimentError::Config(format!("csv encoding failed: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.text(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Plain JSON without the comment line, since JSON has no comments;
    /// the hash is a field instead.
    pub(crate) fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        let mut body = serde_json::to_string_pretty(value).expect("provenance serializes");
        body.push('\n');
        fs::write(&path, body).map_err(|e| ExperimentError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    pub(crate) fn finish(self, summary: String) -> Outcome {
        Outcome {
            files: self.files,
            summary,
        }
    }
}

#[derive(Serialize)]
struct LlmUsage {
    backend: &'static str,
    model: String,
    temperature: f64,
    requests: u64,
    cache_hits: u64,
    transport_calls: u64,
    failures: u64,
}

#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    tool_version: &'static str,
    config_hash: &'a str,
    schema_hash: String,
    data_hash: String,
    records: usize,
    dropped_records: usize,
    llm: Option<LlmUsage>,
}

pub(crate) fn write_provenance(ctx: &Context, art: &mut Artifacts, command: &str) -> Result<(), ExperimentError> {
    let llm = ctx.client.as_ref().map(|c| {
        let s = c.stats();
        LlmUsage {
            backend: if ctx.config.mock.is_some() { "mock" } else { "http" },
            model: c.params().model.clone(),
            temperature: c.params().temperature,
            requests: s.requests,
            cache_hits: s.cache_hits,
            transport_calls: s.transport_calls,
            failures: s.failures,
        }
    });
    let p = Provenance {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        config_hash: &ctx.config_hash,
        schema_hash: ctx.dataset.schema().digest(),
        data_hash: ctx.data_hash(),
        records: ctx.dataset.len(),
        dropped_records: ctx.dataset.dropped(),
        llm,
    };
    art.json(&format!("{}_provenance.json", command.replace('-', "_")), &p)
}

/// Writes the synthetic survey described by the config to `path`.
pub fn write_synthetic(config: &ExperimentConfig, path: &Path) -> Result<usize, ExperimentError> {
    let schema = load_schema(config)?;
    let d = synthesize(schema, &load_marginals(config)?, &config.data.synthetic)?;
    crate::dataset::save_survey(&d, path)?;
    Ok(d.len())
}
