use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DatasetError, VariableSchema};

pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 7.0;
pub const STS_ITEM_COUNT: usize = 9;

/// One survey respondent. `values` follows the schema's variable order;
/// categorical entries hold their integer code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RespondentRecord {
    pub id: String,
    pub values: Vec<f64>,
    pub satisfaction: f64,
}

impl RespondentRecord {
    pub fn value(&self, schema: &VariableSchema, name: &str) -> Option<f64> {
        schema.index_of(name).map(|i| self.values[i])
    }

    pub fn validate(&self, schema: &VariableSchema) -> Result<(), DatasetError> {
        if self.values.len() != schema.len() {
            return Err(DatasetError::Record {
                id: self.id.clone(),
                reason: format!("expected {} values, found {}", schema.len(), self.values.len()),
            });
        }
        for (v, &x) in schema.variables.iter().zip(&self.values) {
            v.validate(x).map_err(|reason| DatasetError::Record {
                id: self.id.clone(),
                reason,
            })?;
        }
        if !(SCALE_MIN..=SCALE_MAX).contains(&self.satisfaction) {
            return Err(DatasetError::Record {
                id: self.id.clone(),
                reason: format!("satisfaction {} outside [1, 7]", self.satisfaction),
            });
        }
        Ok(())
    }
}

/// The nine 7-point items of the satisfaction-with-travel scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SatisfactionItems([u8; STS_ITEM_COUNT]);

impl SatisfactionItems {
    pub fn new(items: &[i64]) -> Result<Self, DatasetError> {
        if items.len() != STS_ITEM_COUNT {
            return Err(DatasetError::Validation(format!(
                "expected {STS_ITEM_COUNT} scale items, found {}",
                items.len()
            )));
        }
        let mut out = [0u8; STS_ITEM_COUNT];
        for (slot, &item) in out.iter_mut().zip(items) {
            if !(1..=7).contains(&item) {
                return Err(DatasetError::Validation(format!("scale item {item} outside 1..=7")));
            }
            *slot = item as u8;
        }
        Ok(Self(out))
    }

    pub fn items(&self) -> &[u8; STS_ITEM_COUNT] {
        &self.0
    }
}

/// Travel satisfaction as the plain mean of the nine scale items.
pub fn compute_satisfaction(items: &SatisfactionItems) -> f64 {
    let sum: u32 = items.0.iter().map(|&x| x as u32).sum();
    sum as f64 / STS_ITEM_COUNT as f64
}

/// A validated collection of records sharing one schema.
#[derive(Clone, Debug)]
pub struct Dataset {
    schema: Arc<VariableSchema>,
    records: Vec<RespondentRecord>,
    dropped: usize,
}

impl Dataset {
    pub fn new(schema: Arc<VariableSchema>, records: Vec<RespondentRecord>) -> Result<Self, DatasetError> {
        let mut ids = std::collections::HashSet::new();
        for r in &records {
            r.validate(&schema)?;
            if !ids.insert(r.id.as_str()) {
                return Err(DatasetError::Record {
                    id: r.id.clone(),
                    reason: "duplicate record id".into(),
                });
            }
        }
        Ok(Self {
            schema,
            records,
            dropped: 0,
        })
    }

    pub(crate) fn with_dropped(mut self, dropped: usize) -> Self {
        self.dropped = dropped;
        self
    }

    /// Subset by position, preserving the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            dropped: 0,
        }
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<VariableSchema> {
        Arc::clone(&self.schema)
    }

    pub fn records(&self) -> &[RespondentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows discarded at load time because a required field was blank.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn labels(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.satisfaction).collect()
    }

    /// All values of one variable, in record order.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.values[index]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfaction_is_item_mean() {
        let all7 = SatisfactionItems::new(&[7; 9]).unwrap();
        assert_eq!(compute_satisfaction(&all7), 7.0);
        let mixed = SatisfactionItems::new(&[1, 2, 3, 4, 5, 6, 7, 1, 7]).unwrap();
        assert_eq!(compute_satisfaction(&mixed), 4.0);
    }

    #[test]
    fn satisfaction_items_validated() {
        assert!(SatisfactionItems::new(&[4; 8]).is_err());
        assert!(SatisfactionItems::new(&[4, 4, 4, 4, 4, 4, 4, 4, 8]).is_err());
        assert!(SatisfactionItems::new(&[0, 4, 4, 4, 4, 4, 4, 4, 4]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn satisfaction_within_item_range(items in proptest::collection::vec(1i64..=7, 9)) {
            let s = compute_satisfaction(&SatisfactionItems::new(&items).unwrap());
            let lo = *items.iter().min().unwrap() as f64;
            let hi = *items.iter().max().unwrap() as f64;
            proptest::prop_assert!(s >= lo && s <= hi);
        }
    }
}
