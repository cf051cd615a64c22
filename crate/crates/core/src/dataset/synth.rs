//! Synthetic survey generator and scripted label rules.
//!
//! Variables are drawn independently from their configured marginals. The
//! label comes from a named [`LabelRule`]: a linear function of the
//! reference encoding (numerics standardized with the marginal mean and
//! standard deviation, categoricals one-hot), clamped to the 1-7 scale.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::encoding::{ColumnEncoding, EncodingSpec};
use super::record::{SCALE_MAX, SCALE_MIN};
use super::{Dataset, DatasetError, RespondentRecord, VariableKind, VariableSchema};

const DEFAULT_MARGINALS: &str = include_str!("../../assets/marginals.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "lowercase")]
pub enum Marginal {
    Categorical {
        weights: Vec<f64>,
    },
    Normal {
        mean: f64,
        sd: f64,
        #[serde(default)]
        clamp_min: Option<f64>,
        #[serde(default)]
        clamp_max: Option<f64>,
        #[serde(default)]
        decimals: Option<u32>,
    },
    Lognormal {
        mean: f64,
        sd: f64,
        #[serde(default)]
        decimals: Option<u32>,
    },
    Poisson {
        mean: f64,
    },
}

impl Marginal {
    /// Nominal mean and standard deviation of a numeric marginal.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match *self {
            Marginal::Categorical { .. } => None,
            Marginal::Normal { mean, sd, .. } | Marginal::Lognormal { mean, sd, .. } => Some((mean, sd)),
            Marginal::Poisson { mean } => Some((mean, mean.sqrt())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    #[serde(default = "one")]
    pub version: u32,
    pub satisfaction_mean: f64,
    pub marginals: BTreeMap<String, Marginal>,
}

fn one() -> u32 {
    1
}

impl MarginalSpec {
    pub fn default_survey() -> Self {
        toml::from_str(DEFAULT_MARGINALS).expect("bundled marginals are valid")
    }

    pub fn default_toml() -> &'static str {
        DEFAULT_MARGINALS
    }

    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        toml::from_str(&text).map_err(|e| DatasetError::Config(e.to_string()))
    }

    fn for_variable(&self, schema: &VariableSchema, i: usize) -> Result<&Marginal, DatasetError> {
        let v = &schema.variables[i];
        let m = self
            .marginals
            .get(&v.name)
            .ok_or_else(|| DatasetError::Config(format!("no marginal for `{}`", v.name)))?;
        let ok = match (v.kind, m) {
            (VariableKind::Categorical, Marginal::Categorical { weights }) => {
                weights.len() == v.categories.len()
                    && weights.iter().all(|w| *w >= 0.0)
                    && weights.iter().sum::<f64>() > 0.0
            }
            (VariableKind::Numeric, Marginal::Categorical { .. }) => false,
            (VariableKind::Numeric, _) => m.moments().is_some_and(|(mu, sd)| mu.is_finite() && sd >= 0.0),
            _ => false,
        };
        if !ok {
            return Err(DatasetError::Config(format!(
                "marginal for `{}` does not fit its kind or category count",
                v.name
            )));
        }
        Ok(m)
    }

    /// Encoding that standardizes with the nominal marginal moments.
    pub fn reference_encoding(&self, schema: &VariableSchema) -> Result<EncodingSpec, DatasetError> {
        let moments = (0..schema.len())
            .map(|i| self.for_variable(schema, i).map(Marginal::moments))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EncodingSpec::from_moments(schema, &moments))
    }
}

/// Identifier of a scripted label rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRuleKind {
    /// Ground truth used by the generator.
    Linear,
    /// Deliberately misaligned rule standing in for an uninformed model.
    Prior,
    /// Every record gets the configured mean satisfaction.
    Constant,
}

impl std::str::FromStr for LabelRuleKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Self::Linear),
            "prior" => Ok(Self::Prior),
            "constant" => Ok(Self::Constant),
            other => Err(DatasetError::UnknownLabelRule(other.to_string())),
        }
    }
}

impl std::fmt::Display for LabelRuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Prior => "prior",
            Self::Constant => "constant",
        })
    }
}

enum Weight {
    Numeric(f64),
    PerCategory(&'static [f64]),
}

// Per-standard-deviation or per-category effects on the 1-7 scale.
const MODE_EFFECT: &[f64] = &[0.6, 0.4, -0.1, 0.2, -0.3, 0.2, 0.1, 0.0, 0.0];
const CAR_EFFECT: &[f64] = &[0.0, 0.05, 0.05, 0.05, 0.05];

fn linear_weight(name: &str) -> Option<Weight> {
    Some(match name {
        "age" => Weight::Numeric(0.08),
        "income" => Weight::Numeric(0.05),
        "car_access" => Weight::PerCategory(CAR_EFFECT),
        "walk_transit_station" => Weight::Numeric(-0.15),
        "walk_parking_lot" => Weight::Numeric(-0.10),
        "walk_hospital" => Weight::Numeric(-0.03),
        "walk_shopping_mall" => Weight::Numeric(-0.05),
        "walk_restaurant" => Weight::Numeric(-0.03),
        "commuting_time" => Weight::Numeric(-0.45),
        "commuting_mode" => Weight::PerCategory(MODE_EFFECT),
        "weekday_trips" => Weight::Numeric(-0.05),
        "past_commuting_time" => Weight::Numeric(0.20),
        "peer_commuting_time" => Weight::Numeric(0.10),
        _ => return None,
    })
}

const PRIOR_CAR: &[f64] = &[-0.4, 0.2, 0.5, 0.6, 0.6];
const PRIOR_GENDER: &[f64] = &[0.0, -0.2];
const PRIOR_MODE: &[f64] = &[0.3, 0.3, 0.0, 0.2, -0.2, 0.4, 0.0, 0.0, 0.0];

fn prior_weight(name: &str) -> Option<Weight> {
    Some(match name {
        "gender" => Weight::PerCategory(PRIOR_GENDER),
        "income" => Weight::Numeric(0.2),
        "car_access" => Weight::PerCategory(PRIOR_CAR),
        "walk_transit_station" => Weight::Numeric(-0.1),
        "walk_parking_lot" => Weight::Numeric(-0.1),
        "commuting_time" => Weight::Numeric(-0.3),
        "commuting_mode" => Weight::PerCategory(PRIOR_MODE),
        "weekday_trips" => Weight::Numeric(-0.35),
        "past_commuting_time" => Weight::Numeric(-0.1),
        "peer_commuting_time" => Weight::Numeric(-0.1),
        _ => return None,
    })
}

/// Linear score over a fixed reference encoding, clamped to the scale.
///
/// `linear` centres its categorical effects on the marginal shares so the
/// expected label equals the configured mean satisfaction. `prior` is
/// anchored at the scale midpoint and overweights car access, gender and
/// trip frequency. Variables the rule does not know get weight 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelRule {
    kind: LabelRuleKind,
    intercept: f64,
    weights: Vec<f64>,
    encoding: EncodingSpec,
    variables: Vec<String>,
}

impl LabelRule {
    pub fn new(kind: LabelRuleKind, schema: &VariableSchema, marginals: &MarginalSpec) -> Result<Self, DatasetError> {
        let encoding = marginals.reference_encoding(schema)?;
        let mut weights = vec![0.0; encoding.width];
        let intercept = match kind {
            LabelRuleKind::Constant => marginals.satisfaction_mean,
            LabelRuleKind::Linear => marginals.satisfaction_mean,
            LabelRuleKind::Prior => 4.0,
        };
        if kind != LabelRuleKind::Constant {
            let table = if kind == LabelRuleKind::Linear {
                linear_weight
            } else {
                prior_weight
            };
            for (i, ve) in encoding.variables.iter().enumerate() {
                match (table(&ve.name), &ve.encoding) {
                    (Some(Weight::Numeric(w)), ColumnEncoding::Numeric { .. }) => weights[ve.offset] = w,
                    (Some(Weight::PerCategory(ws)), ColumnEncoding::OneHot { codes }) if ws.len() == codes.len() => {
                        let shift = if kind == LabelRuleKind::Linear {
                            match marginals.for_variable(schema, i)? {
                                Marginal::Categorical { weights: p } => {
                                    let total: f64 = p.iter().sum();
                                    ws.iter().zip(p).map(|(w, p)| w * p / total).sum()
                                }
                                _ => 0.0,
                            }
                        } else {
                            0.0
                        };
                        for (k, w) in ws.iter().enumerate() {
                            weights[ve.offset + k] = w - shift;
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            kind,
            intercept,
            weights,
            encoding,
            variables: schema.names(),
        })
    }

    pub fn kind(&self) -> LabelRuleKind {
        self.kind
    }

    pub fn encoding(&self) -> &EncodingSpec {
        &self.encoding
    }

    /// Rule output before clamping.
    pub fn raw_score(&self, values: &[f64]) -> Result<f64, DatasetError> {
        let x = self.encoding.encode_values(values)?;
        Ok(self.intercept + x.0.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn evaluate(&self, values: &[f64]) -> Result<f64, DatasetError> {
        Ok(self.raw_score(values)?.clamp(SCALE_MIN, SCALE_MAX))
    }

    /// Total absolute weight per variable, normalized to sum 1 (uniform
    /// when the rule has no weights).
    pub fn variable_weights(&self) -> Vec<(String, f64)> {
        let mut per: Vec<f64> = self
            .encoding
            .variables
            .iter()
            .map(|ve| {
                self.weights[ve.offset..ve.offset + ve.width()]
                    .iter()
                    .map(|w| w.abs())
                    .sum()
            })
            .collect();
        let total: f64 = per.iter().sum();
        if total > 0.0 {
            per.iter_mut().for_each(|w| *w /= total);
        } else {
            let u = 1.0 / per.len() as f64;
            per.iter_mut().for_each(|w| *w = u);
        }
        self.variables.iter().cloned().zip(per).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    pub label_rule: String,
    #[serde(default)]
    pub noise_sd: f64,
}

fn round_to(x: f64, decimals: Option<u32>) -> f64 {
    match decimals {
        Some(d) => {
            let s = 10f64.powi(d as i32);
            (x * s).round() / s
        }
        None => x,
    }
}

fn sample_marginal(m: &Marginal, codes: &[i64], rng: &mut ChaCha8Rng) -> f64 {
    match m {
        Marginal::Categorical { weights } => {
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (w, &c) in weights.iter().zip(codes) {
                if u < *w {
                    return c as f64;
                }
                u -= w;
            }
            *codes.last().expect("categorical has codes") as f64
        }
        Marginal::Normal {
            mean,
            sd,
            clamp_min,
            clamp_max,
            decimals,
        } => {
            let mut x = if *sd > 0.0 {
                Normal::new(*mean, *sd).expect("valid normal").sample(rng)
            } else {
                *mean
            };
            if let Some(lo) = clamp_min {
                x = x.max(*lo);
            }
            if let Some(hi) = clamp_max {
                x = x.min(*hi);
            }
            round_to(x, *decimals)
        }
        Marginal::Lognormal { mean, sd, decimals } => {
            if *sd <= 0.0 {
                return round_to(*mean, *decimals);
            }
            let s2 = (1.0 + (sd / mean).powi(2)).ln();
            let mu = mean.ln() - s2 / 2.0;
            round_to(
                LogNormal::new(mu, s2.sqrt()).expect("valid lognormal").sample(rng),
                *decimals,
            )
        }
        Marginal::Poisson { mean } => {
            if *mean <= 0.0 {
                0.0
            } else {
                Poisson::new(*mean).expect("valid poisson").sample(rng)
            }
        }
    }
}

/// Draws `spec.n` independent records and labels them with the named rule
/// plus optional Gaussian noise (the noisy label is clamped again).
pub fn synthesize(
    schema: Arc<VariableSchema>,
    marginals: &MarginalSpec,
    spec: &SynthSpec,
) -> Result<Dataset, DatasetError> {
    let kind: LabelRuleKind = spec.label_rule.parse()?;
    if spec.n == 0 {
        return Err(DatasetError::Empty);
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(DatasetError::Config(format!("noise_sd {} must be >= 0", spec.noise_sd)));
    }
    let rule = LabelRule::new(kind, &schema, marginals)?;
    let ms = (0..schema.len())
        .map(|i| marginals.for_variable(&schema, i))
        .collect::<Result<Vec<_>, _>>()?;
    let codes: Vec<Vec<i64>> = schema
        .variables
        .iter()
        .map(|v| v.categories.iter().map(|c| c.code).collect())
        .collect();
    let noise = (spec.noise_sd > 0.0).then(|| Normal::new(0.0, spec.noise_sd).expect("valid noise"));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = format!("{}", spec.n).len();
    let mut records = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let values: Vec<f64> = ms
            .iter()
            .zip(&codes)
            .map(|(m, c)| sample_marginal(m, c, &mut rng))
            .collect();
        let mut y = rule.evaluate(&values)?;
        if let Some(noise) = &noise {
            y = (y + noise.sample(&mut rng)).clamp(SCALE_MIN, SCALE_MAX);
        }
        records.push(RespondentRecord {
            id: format!("s{:0width$}", i + 1),
            values,
            satisfaction: y,
        });
    }
    Dataset::new(schema, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, seed: u64, noise: f64) -> SynthSpec {
        SynthSpec {
            n,
            seed,
            label_rule: "linear".into(),
            noise_sd: noise,
        }
    }

    #[test]
    fn gender_share_close_to_marginal() {
        let schema = Arc::new(VariableSchema::default_survey());
        let ds = synthesize(schema.clone(), &MarginalSpec::default_survey(), &spec(874, 11, 0.3)).unwrap();
        let g = schema.index_of("gender").unwrap();
        let male = ds.column(g).iter().filter(|&&x| x == 0.0).count() as f64 / 874.0;
        assert!((male - 0.5471).abs() < 0.05, "male share {male}");
    }

    #[test]
    fn zero_noise_labels_equal_rule() {
        let schema = Arc::new(VariableSchema::default_survey());
        let m = MarginalSpec::default_survey();
        let ds = synthesize(schema.clone(), &m, &spec(200, 5, 0.0)).unwrap();
        let rule = LabelRule::new(LabelRuleKind::Linear, &schema, &m).unwrap();
        for r in ds.records() {
            assert_eq!(r.satisfaction, rule.evaluate(&r.values).unwrap());
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let schema = Arc::new(VariableSchema::default_survey());
        let m = MarginalSpec::default_survey();
        let mut a = Vec::new();
        let mut b = Vec::new();
        super::super::write_survey(&synthesize(schema.clone(), &m, &spec(50, 9, 0.4)).unwrap(), &mut a).unwrap();
        super::super::write_survey(&synthesize(schema, &m, &spec(50, 9, 0.4)).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_rule_rejected() {
        let schema = Arc::new(VariableSchema::default_survey());
        let mut s = spec(10, 1, 0.0);
        s.label_rule = "quadratic".into();
        assert!(matches!(
            synthesize(schema, &MarginalSpec::default_survey(), &s),
            Err(DatasetError::UnknownLabelRule(_))
        ));
    }

    #[test]
    fn marginal_means_at_large_n() {
        let schema = Arc::new(VariableSchema::default_survey());
        let m = MarginalSpec::default_survey();
        let ds = synthesize(schema.clone(), &m, &spec(10_000, 2024, 0.4)).unwrap();
        let n = ds.len() as f64;
        for (i, v) in schema.variables.iter().enumerate() {
            let col = ds.column(i);
            match &m.marginals[&v.name] {
                Marginal::Categorical { weights } => {
                    let total: f64 = weights.iter().sum();
                    for (c, w) in v.categories.iter().zip(weights) {
                        let p = w / total;
                        let share = col.iter().filter(|&&x| x == c.code as f64).count() as f64 / n;
                        let se = (p * (1.0 - p) / n).sqrt().max(1e-4);
                        assert!(
                            (share - p).abs() < 3.0 * se,
                            "{} code {}: {share} vs {p}",
                            v.name,
                            c.code
                        );
                    }
                }
                other => {
                    let (mu, _) = other.moments().unwrap();
                    let mean = col.iter().sum::<f64>() / n;
                    let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                    let se = sd / n.sqrt();
                    assert!((mean - mu).abs() < 3.0 * se, "{}: {mean} vs {mu} (se {se})", v.name);
                }
            }
        }
    }

    #[test]
    fn prior_weights_emphasize_car_access() {
        let schema = VariableSchema::default_survey();
        let rule = LabelRule::new(LabelRuleKind::Prior, &schema, &MarginalSpec::default_survey()).unwrap();
        let w = rule.variable_weights();
        let total: f64 = w.iter().map(|(_, x)| x).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let (top, _) = w.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(top, "car_access");
    }
}
