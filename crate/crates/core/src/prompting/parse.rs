use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::*;
use crate::dataset::{SCALE_MAX, SCALE_MIN};
use crate::evaluation::ImportanceVector;

/// Importance sums inside this band are rescaled to one; others are rejected.
const IMPORTANCE_SUM_BAND: (f64, f64) = (0.98, 1.02);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionBatch {
    pub scores: BTreeMap<String, f64>,
    pub importances: Option<ImportanceVector>,
    /// Everything outside the fenced blocks, trimmed.
    pub reasoning: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    MissingBlock(&'static str),
    Unterminated(&'static str),
    BadHeader(String),
    BadLine(String),
    UnknownId(String),
    DuplicateId(String),
    MissingId(String),
    NonNumeric { key: String, value: String },
    OutOfRange { id: String, score: f64 },
    NegativeImportance { name: String, value: f64 },
    UnknownVariable(String),
    DuplicateVariable(String),
    MissingVariable(String),
    ImportanceSum(f64),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        match self {
            MissingBlock(b) => write!(f, "no `{b}` block"),
            Unterminated(b) => write!(f, "`{b}` block is not closed"),
            BadHeader(h) => write!(f, "expected header `{PREDICTIONS_HEADER}`, found `{h}`"),
            BadLine(l) => write!(f, "malformed line `{l}`"),
            UnknownId(id) => write!(f, "unexpected id `{id}`"),
            DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            MissingId(id) => write!(f, "missing id `{id}`"),
            NonNumeric { key, value } => write!(f, "`{key}` has non-numeric value `{value}`"),
            OutOfRange { id, score } => write!(f, "score {score} for `{id}` outside [1, 7]"),
            NegativeImportance { name, value } => write!(f, "importance of `{name}` is negative ({value})"),
            UnknownVariable(n) => write!(f, "unknown variable `{n}`"),
            DuplicateVariable(n) => write!(f, "duplicate variable `{n}`"),
            MissingVariable(n) => write!(f, "missing variable `{n}`"),
            ImportanceSum(s) => write!(f, "importances sum to {s}, outside [0.98, 1.02]"),
        }
    }
}

/// A response that does not satisfy the output contract. The raw text is
/// kept so callers can log it or retry.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("response parse error: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub raw: String,
}

struct Block<'a> {
    first: usize,
    last: usize,
    body: Vec<&'a str>,
}

/// The last block opened by `fence`, as line indices including the fences.
fn find_block<'a>(lines: &[&'a str], fence: &'static str) -> Result<Option<Block<'a>>, ParseErrorKind> {
    let Some(first) = lines.iter().rposition(|l| l.trim() == fence) else {
        return Ok(None);
    };
    let len = lines[first + 1..]
        .iter()
        .position(|l| l.trim() == CLOSE_FENCE)
        .ok_or(ParseErrorKind::Unterminated(fence))?;
    let body = lines[first + 1..first + 1 + len]
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect();
    Ok(Some(Block {
        first,
        last: first + len + 1,
        body,
    }))
}

fn parse_number(key: &str, value: &str) -> Result<f64, ParseErrorKind> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseErrorKind::NonNumeric {
            key: key.to_string(),
            value: value.trim().to_string(),
        })
}

fn parse_scores(body: &[&str], expected: &[String]) -> Result<BTreeMap<String, f64>, ParseErrorKind> {
    let (header, rows) = body
        .split_first()
        .ok_or_else(|| ParseErrorKind::BadHeader(String::new()))?;
    if header.replace(' ', "") != PREDICTIONS_HEADER {
        return Err(ParseErrorKind::BadHeader(header.to_string()));
    }
    let wanted: HashSet<&str> = expected.iter().map(String::as_str).collect();
    let mut scores = BTreeMap::new();
    for line in rows {
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| ParseErrorKind::BadLine(line.to_string()))?;
        let id = id.trim();
        if !wanted.contains(id) {
            return Err(ParseErrorKind::UnknownId(id.to_string()));
        }
        let score = parse_number(id, value)?;
        if !(SCALE_MIN..=SCALE_MAX).contains(&score) {
            return Err(ParseErrorKind::OutOfRange {
                id: id.to_string(),
                score,
            });
        }
        if scores.insert(id.to_string(), score).is_some() {
            return Err(ParseErrorKind::DuplicateId(id.to_string()));
        }
    }
    if let Some(id) = expected.iter().find(|id| !scores.contains_key(id.as_str())) {
        return Err(ParseErrorKind::MissingId(id.clone()));
    }
    Ok(scores)
}

fn parse_weights(body: &[&str], names: &[String]) -> Result<ImportanceVector, ParseErrorKind> {
    let mut found: BTreeMap<&str, f64> = BTreeMap::new();
    for line in body {
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| ParseErrorKind::BadLine(line.to_string()))?;
        let name = name.trim();
        let Some(known) = names.iter().find(|n| n.as_str() == name) else {
            return Err(ParseErrorKind::UnknownVariable(name.to_string()));
        };
        let w = parse_number(name, value)?;
        if w < 0.0 {
            return Err(ParseErrorKind::NegativeImportance {
                name: name.to_string(),
                value: w,
            });
        }
        if found.insert(known.as_str(), w).is_some() {
            return Err(ParseErrorKind::DuplicateVariable(name.to_string()));
        }
    }
    if let Some(n) = names.iter().find(|n| !found.contains_key(n.as_str())) {
        return Err(ParseErrorKind::MissingVariable(n.clone()));
    }
    let sum: f64 = found.values().sum();
    if !(IMPORTANCE_SUM_BAND.0..=IMPORTANCE_SUM_BAND.1).contains(&sum) {
        return Err(ParseErrorKind::ImportanceSum(sum));
    }
    let entries = names.iter().map(|n| (n.clone(), found[n.as_str()] / sum)).collect();
    Ok(ImportanceVector::new(entries, 1e-9).expect("rescaled weights sum to one"))
}

fn reasoning(lines: &[&str], blocks: &[&Block]) -> String {
    lines
        .iter()
        .enumerate()
        .filter(|(i, _)| !blocks.iter().any(|b| (b.first..=b.last).contains(i)))
        .map(|(_, l)| *l)
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

/// Parses a prediction response. The scores must cover `expected_ids`
/// exactly; when `importance` names are given, an importance block over
/// exactly those names is required too.
pub fn parse_response(
    text: &str,
    expected_ids: &[String],
    importance: Option<&[String]>,
) -> Result<PredictionBatch, ParseError> {
    let err = |kind| ParseError {
        kind,
        raw: text.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    let pred = find_block(&lines, PREDICTIONS_FENCE).map_err(err)?;
    let mut blocks = Vec::new();
    let scores = match &pred {
        Some(b) => {
            blocks.push(b);
            parse_scores(&b.body, expected_ids).map_err(err)?
        }
        None if expected_ids.is_empty() => BTreeMap::new(),
        None => return Err(err(ParseErrorKind::MissingBlock(PREDICTIONS_FENCE))),
    };
    let imp_block;
    let importances = match importance {
        Some(names) => {
            imp_block = find_block(&lines, IMPORTANCE_FENCE)
                .map_err(err)?
                .ok_or_else(|| err(ParseErrorKind::MissingBlock(IMPORTANCE_FENCE)))?;
            blocks.push(&imp_block);
            Some(parse_weights(&imp_block.body, names).map_err(err)?)
        }
        None => None,
    };
    Ok(PredictionBatch {
        scores,
        importances,
        reasoning: reasoning(&lines, &blocks),
    })
}

/// Parses the reply to an importance-only prompt.
pub fn parse_importance(text: &str, names: &[String]) -> Result<(ImportanceVector, String), ParseError> {
    let batch = parse_response(text, &[], Some(names))?;
    Ok((batch.importances.expect("importance requested"), batch.reasoning))
}
