//! Chat-completion transport with a response cache, retries, bounded
//! concurrency, and a scripted mock backend.

mod cache;
mod client;
mod http;
mod mock;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::prompting::Prompt;

pub use cache::{CacheKey, ResponseCache};
pub use client::{ClientStats, LlmClient};
pub use http::HttpBackend;
pub use mock::{MockBackend, MockMode, MockSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmParams {
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for LlmParams {
    fn default() -> Self {
        Self {
            model: "deepseek-reasoner".into(),
            temperature: 0.7,
            max_output_tokens: 8192,
            endpoint: "https://api.deepseek.com".into(),
            timeout_secs: 300,
            max_attempts: 5,
            backoff_ms: 1000,
            max_in_flight: 4,
            api_key_env: "LLM_API_KEY".into(),
        }
    }
}

impl LlmParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        let bad = |m: String| Err(LlmError::Config(m));
        if !(0.0..=1.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 1]", self.temperature));
        }
        if self.timeout_secs == 0 {
            return bad("timeout_secs must be positive".into());
        }
        if self.max_attempts == 0 || self.max_in_flight == 0 {
            return bad("max_attempts and max_in_flight must be at least 1".into());
        }
        if self.model.is_empty() {
            return bad("model name is empty".into());
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("credential rejected (HTTP {status}); not retrying")]
    Credential { status: u16 },
    #[error("request rejected with HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Protocol(String),
    #[error("mock backend: {0}")]
    Mock(String),
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid LLM configuration: {0}")]
    Config(String),
}

/// Something that turns a prompt into raw response text. `trial_index`
/// distinguishes intentional repeats of the same prompt.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &Prompt, params: &LlmParams, trial_index: u64) -> Result<String, LlmError>;
}
