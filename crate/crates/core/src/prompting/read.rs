//! Reads a rendered prompt back into records. This is the inverse of the
//! renderer and is what the scripted mock backend uses to see its input.

use std::collections::HashMap;

use super::render::{valid_id, variable_key};
use super::*;
use crate::dataset::{Dimension, RespondentRecord, VariableSchema, SCALE_MAX, SCALE_MIN};

#[derive(Clone, Debug, PartialEq)]
pub struct QueryRecord {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptContent {
    pub kind: PromptKind,
    pub examples: Vec<RespondentRecord>,
    pub queries: Vec<QueryRecord>,
    /// Variable names listed for importance, empty when not requested.
    pub importance_names: Vec<String>,
}

struct Open {
    labeled: bool,
    id: String,
    values: Vec<Option<f64>>,
    satisfaction: Option<f64>,
}

fn grammar(line: usize, reason: impl Into<String>) -> PromptError {
    PromptError::Grammar {
        line,
        reason: reason.into(),
    }
}

fn parse_value(line: usize, schema: &VariableSchema, var: usize, text: &str) -> Result<f64, PromptError> {
    let v = &schema.variables[var];
    let x = if v.is_categorical() {
        v.category_by_label(text)
            .map(|c| c.code as f64)
            .ok_or_else(|| grammar(line, format!("`{text}` is not a category of {}", v.name)))?
    } else {
        text.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| grammar(line, format!("`{text}` is not a number")))?
    };
    v.validate(x).map_err(|r| grammar(line, r))?;
    Ok(x)
}

fn close(line: usize, open: Open, schema: &VariableSchema, content: &mut PromptContent) -> Result<(), PromptError> {
    let mut values = Vec::with_capacity(schema.len());
    for (v, x) in schema.variables.iter().zip(&open.values) {
        values.push(x.ok_or_else(|| grammar(line, format!("record `{}` lacks {}", open.id, v.name)))?);
    }
    if open.labeled {
        let satisfaction = open
            .satisfaction
            .ok_or_else(|| grammar(line, format!("example `{}` has no satisfaction", open.id)))?;
        content.examples.push(RespondentRecord {
            id: open.id,
            values,
            satisfaction,
        });
    } else {
        content.queries.push(QueryRecord { id: open.id, values });
    }
    Ok(())
}

/// Recovers the examples, queries and requested importance names from a
/// prompt, rejecting anything that deviates from the rendered grammar.
pub fn read_prompt(prompt: &Prompt, schema: &VariableSchema) -> Result<PromptContent, PromptError> {
    let kind = if prompt.system_text.contains(PREDICTIONS_FENCE) {
        PromptKind::Predict
    } else if prompt.system_text.contains(IMPORTANCE_FENCE) {
        PromptKind::Importance
    } else {
        return Err(grammar(0, "system text states no output block"));
    };
    let keys: HashMap<String, usize> = schema
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (variable_key(v), i))
        .collect();
    let mut content = PromptContent {
        kind,
        examples: Vec::new(),
        queries: Vec::new(),
        importance_names: Vec::new(),
    };
    let mut open: Option<Open> = None;
    let mut in_variables = false;
    let mut saw_variables = false;
    let mut count: Option<usize> = None;

    for (i, line) in prompt.user_text.lines().enumerate() {
        let n = i + 1;
        if in_variables {
            if line.is_empty() {
                in_variables = false;
                continue;
            }
            let name = line
                .strip_prefix("- ")
                .and_then(|l| l.split_once(": "))
                .map(|(name, _)| name)
                .ok_or_else(|| grammar(n, "malformed variable line"))?;
            if schema.index_of(name).is_none() {
                return Err(grammar(n, format!("unknown variable `{name}`")));
            }
            content.importance_names.push(name.to_string());
            continue;
        }
        if let Some(rec) = open.as_mut() {
            if line.is_empty() {
                close(n, open.take().unwrap(), schema, &mut content)?;
            } else if Dimension::ALL.iter().any(|d| d.heading() == line) {
            } else if let Some(item) = line.strip_prefix("- ") {
                let (key, value) = item
                    .rsplit_once(": ")
                    .ok_or_else(|| grammar(n, "malformed variable line"))?;
                let &var = keys
                    .get(key)
                    .ok_or_else(|| grammar(n, format!("unknown variable `{key}`")))?;
                if rec.values[var].is_some() {
                    return Err(grammar(n, format!("`{key}` given twice")));
                }
                rec.values[var] = Some(parse_value(n, schema, var, value)?);
            } else if let Some(value) = line.strip_prefix(SATISFACTION_LINE).and_then(|l| l.strip_prefix(": ")) {
                if !rec.labeled {
                    return Err(grammar(n, "respondent to predict carries a label"));
                }
                let y = value
                    .parse::<f64>()
                    .ok()
                    .filter(|y| (SCALE_MIN..=SCALE_MAX).contains(y))
                    .ok_or_else(|| grammar(n, format!("bad satisfaction `{value}`")))?;
                rec.satisfaction = Some(y);
            } else {
                return Err(grammar(n, format!("unexpected line `{line}` inside a record")));
            }
            continue;
        }
        if let Some(tag) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let (tag, id) = tag.split_once(' ').ok_or_else(|| grammar(n, "malformed record tag"))?;
            let labeled = match tag {
                EXAMPLE_TAG => true,
                RESPONDENT_TAG => false,
                _ => return Err(grammar(n, format!("unknown record tag `{tag}`"))),
            };
            if !valid_id(id) {
                return Err(grammar(n, format!("invalid id `{id}`")));
            }
            open = Some(Open {
                labeled,
                id: id.to_string(),
                values: vec![None; schema.len()],
                satisfaction: None,
            });
        } else if line == VARIABLES_TITLE {
            in_variables = true;
            saw_variables = true;
        } else if let Some(rest) = line.strip_prefix(COUNT_PREFIX) {
            let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
            count = Some(digits.parse().map_err(|_| grammar(n, "malformed count line"))?);
        }
    }
    if let Some(rec) = open.take() {
        close(prompt.user_text.lines().count(), rec, schema, &mut content)?;
    }

    let wants_importance = prompt.system_text.contains(IMPORTANCE_FENCE);
    if wants_importance != saw_variables {
        return Err(grammar(0, "importance request and variable list disagree"));
    }
    if wants_importance && content.importance_names != schema.names() {
        return Err(grammar(0, "variable list does not match the schema"));
    }
    match kind {
        PromptKind::Predict => {
            if content.queries.is_empty() {
                return Err(grammar(0, "no respondents to predict"));
            }
            if count != Some(content.queries.len()) {
                return Err(grammar(
                    0,
                    format!(
                        "count line {count:?} does not match {} respondents",
                        content.queries.len()
                    ),
                ));
            }
        }
        PromptKind::Importance => {
            if !content.queries.is_empty() {
                return Err(grammar(0, "importance prompt lists respondents to predict"));
            }
        }
    }
    Ok(content)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::*;
    use std::sync::Arc;

    fn data(n: usize) -> Dataset {
        synthesize(
            Arc::new(VariableSchema::default_survey()),
            &MarginalSpec::default_survey(),
            &SynthSpec {
                n,
                seed: 2,
                label_rule: "linear".into(),
                noise_sd: 0.4,
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trips_records() {
        let d = data(8);
        let (ex, q) = d.records().split_at(3);
        let p = render_labeled(ex, q, d.schema(), true).unwrap();
        let c = read_prompt(&p, d.schema()).unwrap();
        assert_eq!(c.kind, PromptKind::Predict);
        assert_eq!(c.examples, ex);
        assert_eq!(c.queries.len(), 5);
        for (a, b) in c.queries.iter().zip(q) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.values, b.values);
        }
        assert_eq!(c.importance_names, d.schema().names());
    }

    #[test]
    fn importance_prompt_round_trip() {
        let d = data(4);
        let p = render_importance(d.records(), d.schema()).unwrap();
        let c = read_prompt(&p, d.schema()).unwrap();
        assert_eq!(c.kind, PromptKind::Importance);
        assert_eq!(c.examples.len(), 4);
        assert!(c.queries.is_empty());
        let p = render_importance(&[], d.schema()).unwrap();
        assert!(read_prompt(&p, d.schema()).unwrap().examples.is_empty());
    }

    #[test]
    fn mutations_are_rejected() {
        let d = data(3);
        let p = render_zero_shot(d.records(), d.schema(), false).unwrap();
        let mutate = |from: &str, to: &str| {
            let mut q = p.clone();
            q.user_text = q.user_text.replacen(from, to, 1);
            read_prompt(&q, d.schema())
        };
        assert!(mutate("- Age (years): ", "- Age: ").is_err());
        assert!(mutate("[Respondent ", "[Person ").is_err());
        assert!(mutate("exactly 3 lines", "exactly 4 lines").is_err());
        assert!(mutate("- Gender: ", "- Gender: robot").is_err());
        assert!(mutate("Socioeconomics\n", "Socioeconomics\nSatisfaction with travel: 5\n").is_err());
        let mut q = p.clone();
        q.system_text = q.system_text.replace("```predictions", "a block");
        assert!(read_prompt(&q, d.schema()).is_err());
        assert!(read_prompt(&p, d.schema()).is_ok());
    }
}
