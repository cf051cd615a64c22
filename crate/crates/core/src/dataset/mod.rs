//! Survey schema, loading, encoding, splitting and synthesis.

mod encoding;
mod io;
mod record;
mod schema;
mod split;
mod synth;

use std::path::{Path, PathBuf};

pub use encoding::{
    encode, encode_dataset, fit_encoding, ColumnEncoding, ColumnInfo, EncodingSpec, FeatureMatrix, FeatureVector,
    VariableEncoding,
};
pub use io::{format_value, load_survey, read_survey, save_survey, write_survey};
pub use record::{
    compute_satisfaction, Dataset, RespondentRecord, SatisfactionItems, SCALE_MAX, SCALE_MIN, STS_ITEM_COUNT,
};
pub use schema::{Category, Dimension, VariableDescriptor, VariableKind, VariableSchema};
pub use split::{split, split_indices};
pub use synth::{synthesize, LabelRule, LabelRuleKind, Marginal, MarginalSpec, SynthSpec};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("record `{id}`: {reason}")]
    Record { id: String, reason: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dataset is empty")]
    Empty,
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("unknown label rule `{0}` (expected linear, prior or constant)")]
    UnknownLabelRule(String),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
