//! Variable schema for the survey table.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

const DEFAULT_SCHEMA: &str = include_str!("../../assets/schema.toml");

/// The four groups predictors are presented under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Socioeconomics,
    BuiltEnvironment,
    TravelCharacteristics,
    ReferencePoints,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Socioeconomics,
        Dimension::BuiltEnvironment,
        Dimension::TravelCharacteristics,
        Dimension::ReferencePoints,
    ];

    /// Heading used when records are written out for the model.
    pub fn heading(self) -> &'static str {
        match self {
            Dimension::Socioeconomics => "Socioeconomics",
            Dimension::BuiltEnvironment => "Built environment (walking time from home to the nearest facility)",
            Dimension::TravelCharacteristics => "Travel characteristics",
            Dimension::ReferencePoints => {
                "Reference points (commute before the most recent relocation; family members as peers)"
            }
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Socioeconomics => "socioeconomics",
            Dimension::BuiltEnvironment => "built_environment",
            Dimension::TravelCharacteristics => "travel_characteristics",
            Dimension::ReferencePoints => "reference_points",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub code: i64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableDescriptor {
    /// Column header and importance key.
    pub name: String,
    /// Human-readable name used in prompts.
    pub label: String,
    pub dimension: Dimension,
    pub kind: VariableKind,
    #[serde(default)]
    pub unit: String,
    #[serde(default)]
    pub categories: Vec<Category>,
    /// Inclusive lower bound for numeric values.
    #[serde(default)]
    pub min: Option<f64>,
    /// Exclusive lower bound for numeric values.
    #[serde(default)]
    pub greater_than: Option<f64>,
}

impl VariableDescriptor {
    pub fn is_categorical(&self) -> bool {
        self.kind == VariableKind::Categorical
    }

    pub fn category_index(&self, code: i64) -> Option<usize> {
        self.categories.iter().position(|c| c.code == code)
    }

    pub fn category_by_label(&self, label: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.label.eq_ignore_ascii_case(label))
    }

    /// Checks a raw value against the declared kind and bounds.
    pub fn validate(&self, value: f64) -> Result<(), String> {
        if !value.is_finite() {
            return Err(format!("{}: non-finite value", self.name));
        }
        match self.kind {
            VariableKind::Categorical => {
                if value.fract() != 0.0 || self.category_index(value as i64).is_none() {
                    return Err(format!("{}: code {} is not a declared category", self.name, value));
                }
            }
            VariableKind::Numeric => {
                if let Some(min) = self.min {
                    if value < min {
                        return Err(format!("{}: {} is below the minimum {}", self.name, value, min));
                    }
                }
                if let Some(gt) = self.greater_than {
                    if value <= gt {
                        return Err(format!("{}: {} must exceed {}", self.name, value, gt));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Ordered predictor list plus the name of the label column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSchema {
    #[serde(default = "default_version")]
    pub version: u32,
    pub label: String,
    pub variables: Vec<VariableDescriptor>,
}

fn default_version() -> u32 {
    1
}

impl VariableSchema {
    /// The 17-predictor schema shipped in `assets/schema.toml`.
    pub fn default_survey() -> Self {
        Self::from_toml_str(DEFAULT_SCHEMA).expect("bundled schema is valid")
    }

    pub fn default_toml() -> &'static str {
        DEFAULT_SCHEMA
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DatasetError> {
        let schema: VariableSchema = toml::from_str(text).map_err(|e| DatasetError::Config(e.to_string()))?;
        schema.check()?;
        Ok(schema)
    }

    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn new(label: impl Into<String>, variables: Vec<VariableDescriptor>) -> Result<Self, DatasetError> {
        let schema = VariableSchema {
            version: 1,
            label: label.into(),
            variables,
        };
        schema.check()?;
        Ok(schema)
    }

    fn check(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) || v.name == self.label {
                return Err(DatasetError::Schema(format!("duplicate variable name `{}`", v.name)));
            }
            if v.is_categorical() {
                if v.categories.len() < 2 {
                    return Err(DatasetError::Schema(format!(
                        "categorical `{}` needs at least two categories",
                        v.name
                    )));
                }
                let codes: HashSet<_> = v.categories.iter().map(|c| c.code).collect();
                if codes.len() != v.categories.len() {
                    return Err(DatasetError::Schema(format!("`{}` repeats a category code", v.name)));
                }
            }
        }
        if self.variables.is_empty() {
            return Err(DatasetError::Schema("schema has no variables".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&VariableDescriptor> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// Stable digest of the schema, used in provenance records.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        crate::util::sha256_hex(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_matches_survey_table() {
        let s = VariableSchema::default_survey();
        assert_eq!(s.len(), 17);
        assert_eq!(s.label, "satisfaction");
        let mode = s.get("commuting_mode").unwrap();
        assert_eq!(mode.categories.len(), 9);
        assert_eq!(mode.categories[2].label, "subway");
        for d in Dimension::ALL {
            assert!(s.variables.iter().any(|v| v.dimension == d));
        }
        assert_eq!(s.get("education").unwrap().categories.len(), 6);
        assert_eq!(s.get("car_access").unwrap().categories.len(), 5);
    }

    #[test]
    fn rejects_duplicate_names_and_single_category() {
        let mut s = VariableSchema::default_survey();
        s.variables.push(s.variables[0].clone());
        assert!(matches!(s.check(), Err(DatasetError::Schema(_))));

        let mut s = VariableSchema::default_survey();
        s.variables[0].categories.truncate(1);
        assert!(s.check().is_err());
    }

    #[test]
    fn validate_bounds() {
        let s = VariableSchema::default_survey();
        let age = s.get("age").unwrap();
        assert!(age.validate(0.0).is_err());
        assert!(age.validate(30.0).is_ok());
        let t = s.get("commuting_time").unwrap();
        assert!(t.validate(-1.0).is_err());
        assert!(t.validate(0.0).is_ok());
        let m = s.get("commuting_mode").unwrap();
        assert!(m.validate(12.0).is_err());
        assert!(m.validate(9.0).is_ok());
        assert!(m.validate(2.5).is_err());
    }
}
