use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde_json::{json, Value};

use super::{Backend, LlmError, LlmParams};
use crate::prompting::Prompt;

const MAX_BACKOFF: Duration = Duration::from_secs(60);

enum Failure {
    Transient(String),
    Fatal(LlmError),
}

/// Chat-completions client over blocking HTTP.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    attempts: AtomicU64,
}

impl HttpBackend {
    pub fn new(params: &LlmParams, api_key: Option<String>) -> Result<Self, LlmError> {
        params.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(params.timeout())
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            client,
            api_key,
            attempts: AtomicU64::new(0),
        })
    }

    /// Reads the API key from the environment variable named in `params`.
    pub fn from_env(params: &LlmParams) -> Result<Self, LlmError> {
        let key = std::env::var(&params.api_key_env).ok().filter(|k| !k.is_empty());
        if key.is_none() {
            log::warn!(
                "{} is not set; sending requests without credentials",
                params.api_key_env
            );
        }
        Self::new(params, key)
    }

    /// HTTP requests sent so far, retries included.
    pub fn attempts(&self) -> u64 {
        self.attempts.load(Ordering::Relaxed)
    }

    fn url(params: &LlmParams) -> String {
        let base = params.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn attempt(&self, url: &str, body: &Value) -> Result<String, Failure> {
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(Failure::Fatal(LlmError::Credential {
                status: status.as_u16(),
            }));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Transient(format!("HTTP {status}")));
        }
        let text = resp.text().map_err(|e| Failure::Transient(e.to_string()))?;
        if !status.is_success() {
            return Err(Failure::Fatal(LlmError::Status {
                status: status.as_u16(),
                body: text,
            }));
        }
        extract_message(&text).map_err(Failure::Fatal)
    }
}

/// First choice's content, prefixed with the provider's reasoning field
/// in a `<think>` block when one is present.
fn extract_message(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Protocol(e.to_string()))?;
    let msg = &v["choices"][0]["message"];
    let content = msg["content"]
        .as_str()
        .ok_or_else(|| LlmError::Protocol("no choices[0].message.content".into()))?;
    match msg["reasoning_content"].as_str().filter(|r| !r.is_empty()) {
        Some(r) => Ok(format!("<think>\n{r}\n</think>\n{content}")),
        None => Ok(content.to_string()),
    }
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &Prompt, params: &LlmParams, _trial_index: u64) -> Result<String, LlmError> {
        let url = Self::url(params);
        let body = json!({
            "model": params.model,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.user_text},
            ],
        });
        let mut last = String::new();
        for attempt in 1..=params.max_attempts {
            match self.attempt(&url, &body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    log::warn!("attempt {attempt}/{} failed: {msg}", params.max_attempts);
                    last = msg;
                    if attempt < params.max_attempts {
                        let wait = Duration::from_millis(params.backoff_ms.saturating_mul(1 << (attempt - 1).min(20)));
                        std::thread::sleep(wait.min(MAX_BACKOFF));
                    }
                }
            }
        }
        Err(LlmError::Transport {
            attempts: params.max_attempts,
            message: last,
        })
    }
}
