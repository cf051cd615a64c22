//! Few-shot LLM prediction of travel satisfaction from tabular survey data.
//!
//! The crate covers the whole evaluation loop: survey ingestion and
//! synthesis ([`dataset`]), support-set selection and representativeness
//! tests ([`selection`]), prompt rendering and response parsing
//! ([`prompting`]), chat-completion transport with caching and a scripted
//! mock ([`llm`]), linear and gradient-boosted baselines ([`baselines`]),
//! metrics and significance tests ([`evaluation`]) and the experiment
//! drivers that tie them together ([`experiment`]).

pub mod baselines;
pub mod dataset;
pub mod evaluation;
pub mod experiment;
pub mod llm;
pub mod prompting;
pub mod selection;
mod util;

pub use dataset::{Dataset, FeatureMatrix, RespondentRecord, VariableSchema};
pub use evaluation::{ImportanceVector, MetricPair};
pub use experiment::{Context, ExperimentConfig};
pub use llm::{LlmClient, LlmParams, MockSpec};
pub use prompting::Prompt;
pub use selection::SupportSet;
pub use util::derive_seed;
