//! Prompt rendering and response parsing.
//!
//! The wire grammar shared by the renderer, the response parser and the
//! scripted mock is described in `docs/output-contract.md`.

mod parse;
mod read;
mod render;

use serde::Serialize;

pub use parse::{parse_importance, parse_response, ParseError, ParseErrorKind, PredictionBatch};
pub use read::{read_prompt, PromptContent, QueryRecord};
pub use render::{render_few_shot, render_importance, render_labeled, render_zero_shot, DEFAULT_BATCH_SIZE};

pub const PREDICTIONS_FENCE: &str = "```predictions";
pub const IMPORTANCE_FENCE: &str = "```importance";
pub const CLOSE_FENCE: &str = "```";
pub const PREDICTIONS_HEADER: &str = "id,score";
pub const EXAMPLE_TAG: &str = "Example";
pub const RESPONDENT_TAG: &str = "Respondent";
pub const SATISFACTION_LINE: &str = "Satisfaction with travel";
pub const VARIABLES_TITLE: &str = "Variables:";
pub const EXAMPLES_TITLE: &str = "Labeled examples:";
pub const QUERIES_TITLE: &str = "Respondents to predict:";
pub const COUNT_PREFIX: &str = "The predictions block must contain exactly ";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Predict,
    Importance,
}

/// A rendered request. The ids of the records to be scored are kept
/// alongside the text so responses can be checked against them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prompt {
    pub kind: PromptKind,
    pub system_text: String,
    pub user_text: String,
    pub query_ids: Vec<String>,
    pub want_importance: bool,
    pub token_estimate: usize,
}

impl Prompt {
    pub(crate) fn new(
        kind: PromptKind,
        system_text: String,
        user_text: String,
        query_ids: Vec<String>,
        want_importance: bool,
    ) -> Self {
        // Roughly four characters per token for English text.
        let token_estimate = (system_text.len() + user_text.len()).div_ceil(4);
        Self {
            kind,
            system_text,
            user_text,
            query_ids,
            want_importance,
            token_estimate,
        }
    }

    /// Bytes that identify the request: system text, a NUL separator, user text.
    pub fn bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(self.system_text.len() + self.user_text.len() + 1);
        b.extend_from_slice(self.system_text.as_bytes());
        b.push(0);
        b.extend_from_slice(self.user_text.as_bytes());
        b
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("no query records")]
    NoQueries,
    #[error("few-shot prompt needs at least one support record")]
    NoSupport,
    #[error("support and query sets share ids: {}", .0.join(", "))]
    Contamination(Vec<String>),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("id `{0}` is empty or contains whitespace, commas or brackets")]
    BadId(String),
    #[error("record does not match schema: {0}")]
    Record(String),
    #[error("prompt line {line}: {reason}")]
    Grammar { line: usize, reason: String },
}
