//! Deterministic backend that reads the prompt back and answers with a
//! known rule, so the whole pipeline can run without a network.

use std::fmt::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Backend, LlmError, LlmParams};
use crate::dataset::{LabelRule, LabelRuleKind, MarginalSpec, RespondentRecord, VariableSchema, SCALE_MAX, SCALE_MIN};
use crate::prompting::{
    read_prompt, Prompt, PromptKind, CLOSE_FENCE, IMPORTANCE_FENCE, PREDICTIONS_FENCE, PREDICTIONS_HEADER,
};
use crate::util::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    /// Score every query with the label rule.
    Rule,
    /// Copy the label of the nearest labeled example; use the rule when the
    /// prompt has no examples. Distance weights each variable by its share
    /// of the rule's absolute weight.
    NearestNeighbor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockSpec {
    pub mode: MockMode,
    pub rule: LabelRuleKind,
    pub noise_sd: f64,
    pub seed: u64,
    /// Log-scale spread applied to reported importances per trial.
    pub importance_jitter: f64,
}

impl Default for MockSpec {
    fn default() -> Self {
        Self {
            mode: MockMode::NearestNeighbor,
            rule: LabelRuleKind::Prior,
            noise_sd: 0.0,
            seed: 0,
            importance_jitter: 0.1,
        }
    }
}

impl FromStr for MockSpec {
    type Err = LlmError;

    /// `nn1` (nearest neighbour, prior rule without examples), `linear`,
    /// `prior` or `constant`.
    fn from_str(s: &str) -> Result<Self, LlmError> {
        if s == "nn1" {
            return Ok(Self::default());
        }
        let rule = s
            .parse::<LabelRuleKind>()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            mode: MockMode::Rule,
            rule,
            ..Self::default()
        })
    }
}

pub struct MockBackend {
    schema: Arc<VariableSchema>,
    rule: LabelRule,
    spec: MockSpec,
    // Per-column distance weights for the neighbour search.
    metric: Vec<f64>,
    calls: AtomicU64,
}

fn id_hash(id: &str) -> u64 {
    // FNV-1a
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn pearson_abs(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).abs()
    }
}

impl MockBackend {
    pub fn new(schema: Arc<VariableSchema>, marginals: &MarginalSpec, spec: MockSpec) -> Result<Self, LlmError> {
        if !(spec.noise_sd >= 0.0 && spec.importance_jitter >= 0.0) {
            return Err(LlmError::Config("mock noise must be non-negative".into()));
        }
        let rule = LabelRule::new(spec.rule, &schema, marginals).map_err(|e| LlmError::Config(e.to_string()))?;
        let per: Vec<f64> = rule.variable_weights().into_iter().map(|(_, w)| w).collect();
        let mut metric = vec![0.0; rule.encoding().width];
        for (ve, w) in rule.encoding().variables.iter().zip(&per) {
            metric[ve.offset..ve.offset + ve.width()]
                .iter_mut()
                .for_each(|m| *m = *w);
        }
        Ok(Self {
            schema,
            rule,
            spec,
            metric,
            calls: AtomicU64::new(0),
        })
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn encode(&self, values: &[f64]) -> Result<Vec<f64>, LlmError> {
        Ok(self
            .rule
            .encoding()
            .encode_values(values)
            .map_err(|e| LlmError::Mock(e.to_string()))?
            .0)
    }

    fn score(&self, values: &[f64], examples: &[(Vec<f64>, f64)]) -> Result<f64, LlmError> {
        if self.spec.mode == MockMode::NearestNeighbor && !examples.is_empty() {
            let x = self.encode(values)?;
            let dist = |e: &Vec<f64>| {
                e.iter()
                    .zip(&x)
                    .zip(&self.metric)
                    .map(|((a, b), w)| w * (a - b) * (a - b))
                    .sum::<f64>()
            };
            let mut best = 0;
            for (i, e) in examples.iter().enumerate().skip(1) {
                if dist(&e.0) < dist(&examples[best].0) {
                    best = i;
                }
            }
            return Ok(examples[best].1);
        }
        self.rule.evaluate(values).map_err(|e| LlmError::Mock(e.to_string()))
    }

    fn importances(&self, examples: &[RespondentRecord], trial_index: u64) -> Result<Vec<(String, f64)>, LlmError> {
        let mut weights: Vec<(String, f64)> = self.rule.variable_weights();
        if self.spec.mode == MockMode::NearestNeighbor && examples.len() >= 3 {
            let rows = examples
                .iter()
                .map(|r| self.encode(&r.values))
                .collect::<Result<Vec<_>, _>>()?;
            let y: Vec<f64> = examples.iter().map(|r| r.satisfaction).collect();
            let mut per = vec![0.0f64; self.schema.len()];
            for (j, col) in self.rule.encoding().columns().iter().enumerate() {
                let x: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                per[col.variable] = per[col.variable].max(pearson_abs(&x, &y));
            }
            if per.iter().any(|&w| w > 0.0) {
                weights = self.schema.names().into_iter().zip(per).collect();
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.spec.seed, &[trial_index, u64::MAX]));
        for (_, w) in weights.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w *= (self.spec.importance_jitter * z).exp();
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        let n = weights.len() as f64;
        for (_, w) in weights.iter_mut() {
            *w = if total > 0.0 { *w / total } else { 1.0 / n };
        }
        Ok(weights)
    }
}

impl Backend for MockBackend {
    fn complete(&self, prompt: &Prompt, _params: &LlmParams, trial_index: u64) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let content = read_prompt(prompt, &self.schema).map_err(|e| LlmError::Mock(e.to_string()))?;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Mock response ({:?} mode, {} rule) with {} labeled example(s).",
            self.spec.mode,
            self.spec.rule,
            content.examples.len()
        );
        if content.kind == PromptKind::Predict {
            let examples = content
                .examples
                .iter()
                .map(|r| Ok((self.encode(&r.values)?, r.satisfaction)))
                .collect::<Result<Vec<_>, LlmError>>()?;
            let _ = writeln!(out, "{PREDICTIONS_FENCE}\n{PREDICTIONS_HEADER}");
            for q in &content.queries {
                let mut s = self.score(&q.values, &examples)?;
                if self.spec.noise_sd > 0.0 {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(self.spec.seed, &[trial_index, id_hash(&q.id)]));
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s += self.spec.noise_sd * z;
                }
                let _ = writeln!(out, "{},{}", q.id, s.clamp(SCALE_MIN, SCALE_MAX));
            }
            let _ = writeln!(out, "{CLOSE_FENCE}");
        }
        if !content.importance_names.is_empty() {
            let _ = writeln!(out, "{IMPORTANCE_FENCE}");
            for (name, w) in self.importances(&content.examples, trial_index)? {
                let _ = writeln!(out, "{name}={w}");
            }
            let _ = writeln!(out, "{CLOSE_FENCE}");
        }
        Ok(out)
    }
}
