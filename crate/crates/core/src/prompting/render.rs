use std::collections::HashSet;
use std::fmt::Write;

use super::*;
use crate::dataset::{format_value, Dimension, RespondentRecord, VariableDescriptor, VariableSchema};
use crate::selection::SupportSet;

/// Queries per prompt unless configured otherwise.
pub const DEFAULT_BATCH_SIZE: usize = 20;

const SYSTEM: &str = include_str!("../../templates/system.txt");
const IMPORTANCE_SYSTEM: &str = include_str!("../../templates/importance_system.txt");
const EXAMPLES_NOTE: &str = include_str!("../../templates/examples_note.txt");
const IMPORTANCE_CONTRACT: &str = include_str!("../../templates/importance_contract.txt");

pub(crate) fn variable_key(v: &VariableDescriptor) -> String {
    if v.unit.is_empty() {
        v.label.clone()
    } else {
        format!("{} ({})", v.label, v.unit)
    }
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '[' | ']' | '='))
}

fn fill(template: &str, examples: bool, importance: bool) -> String {
    template
        .replace(
            "{{examples_note}}",
            if examples { EXAMPLES_NOTE.trim_end() } else { "" },
        )
        .replace(
            "{{importance_contract}}",
            if importance { IMPORTANCE_CONTRACT.trim_end() } else { "" },
        )
}

fn check_records(
    records: &[RespondentRecord],
    schema: &VariableSchema,
    seen: &mut HashSet<String>,
) -> Result<(), PromptError> {
    for r in records {
        if !valid_id(&r.id) {
            return Err(PromptError::BadId(r.id.clone()));
        }
        if !seen.insert(r.id.clone()) {
            return Err(PromptError::DuplicateId(r.id.clone()));
        }
        r.validate(schema).map_err(|e| PromptError::Record(e.to_string()))?;
    }
    Ok(())
}

fn write_record(out: &mut String, tag: &str, r: &RespondentRecord, schema: &VariableSchema, labeled: bool) {
    let _ = writeln!(out, "[{tag} {}]", r.id);
    for dim in Dimension::ALL {
        let vars: Vec<(usize, &VariableDescriptor)> = schema
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.dimension == dim)
            .collect();
        if vars.is_empty() {
            continue;
        }
        out.push_str(dim.heading());
        out.push('\n');
        for (i, v) in vars {
            let x = r.values[i];
            let shown = match v.category_index(x as i64) {
                Some(c) if v.is_categorical() => v.categories[c].label.clone(),
                _ => format_value(x, v.is_categorical()),
            };
            let _ = writeln!(out, "- {}: {shown}", variable_key(v));
        }
    }
    if labeled {
        let _ = writeln!(out, "{SATISFACTION_LINE}: {}", format_value(r.satisfaction, false));
    }
    out.push('\n');
}

fn write_variables(out: &mut String, schema: &VariableSchema) {
    out.push_str(VARIABLES_TITLE);
    out.push('\n');
    for v in &schema.variables {
        let _ = writeln!(out, "- {}: {}", v.name, variable_key(v));
    }
    out.push('\n');
}

fn write_examples(out: &mut String, examples: &[RespondentRecord], schema: &VariableSchema) {
    if examples.is_empty() {
        return;
    }
    out.push_str(EXAMPLES_TITLE);
    out.push_str("\n\n");
    for r in examples {
        write_record(out, EXAMPLE_TAG, r, schema, true);
    }
}

/// Renders a prediction prompt with `examples` shown with their labels.
/// Unlike [`render_few_shot`] this does not reject examples that are also
/// queries.
pub fn render_labeled(
    examples: &[RespondentRecord],
    queries: &[RespondentRecord],
    schema: &VariableSchema,
    want_importance: bool,
) -> Result<Prompt, PromptError> {
    if queries.is_empty() {
        return Err(PromptError::NoQueries);
    }
    check_records(examples, schema, &mut HashSet::new())?;
    check_records(queries, schema, &mut HashSet::new())?;

    let system = fill(SYSTEM, !examples.is_empty(), want_importance);
    let mut user = String::new();
    if want_importance {
        write_variables(&mut user, schema);
    }
    write_examples(&mut user, examples, schema);
    user.push_str(QUERIES_TITLE);
    user.push_str("\n\n");
    for r in queries {
        write_record(&mut user, RESPONDENT_TAG, r, schema, false);
    }
    let _ = writeln!(
        user,
        "{COUNT_PREFIX}{} lines after the header, one for each respondent above.",
        queries.len()
    );
    let ids = queries.iter().map(|r| r.id.clone()).collect();
    Ok(Prompt::new(PromptKind::Predict, system, user, ids, want_importance))
}

pub fn render_zero_shot(
    queries: &[RespondentRecord],
    schema: &VariableSchema,
    want_importance: bool,
) -> Result<Prompt, PromptError> {
    render_labeled(&[], queries, schema, want_importance)
}

/// Few-shot prompt; fails if any support id is also a query id.
pub fn render_few_shot(
    support: &SupportSet,
    queries: &[RespondentRecord],
    schema: &VariableSchema,
    want_importance: bool,
) -> Result<Prompt, PromptError> {
    if support.is_empty() {
        return Err(PromptError::NoSupport);
    }
    let qids: HashSet<&str> = queries.iter().map(|r| r.id.as_str()).collect();
    let shared: Vec<String> = support.ids().filter(|id| qids.contains(id)).map(String::from).collect();
    if !shared.is_empty() {
        return Err(PromptError::Contamination(shared));
    }
    render_labeled(support.members(), queries, schema, want_importance)
}

/// Standalone importance request over the schema, with optional labeled
/// examples.
pub fn render_importance(examples: &[RespondentRecord], schema: &VariableSchema) -> Result<Prompt, PromptError> {
    check_records(examples, schema, &mut HashSet::new())?;
    let system = fill(IMPORTANCE_SYSTEM, !examples.is_empty(), false);
    let mut user = String::new();
    write_variables(&mut user, schema);
    write_examples(&mut user, examples, schema);
    let _ = writeln!(
        user,
        "Give an importance value for each of the {} variables listed above.",
        schema.len()
    );
    Ok(Prompt::new(PromptKind::Importance, system, user, Vec::new(), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::*;
    use crate::selection::SupportProvenance;
    use std::sync::Arc;

    fn data(n: usize) -> Dataset {
        synthesize(
            Arc::new(VariableSchema::default_survey()),
            &MarginalSpec::default_survey(),
            &SynthSpec {
                n,
                seed: 9,
                label_rule: "linear".into(),
                noise_sd: 0.2,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_shot_has_no_labels_and_one_id_each() {
        let d = data(20);
        let p = render_zero_shot(d.records(), d.schema(), false).unwrap();
        assert!(!p.user_text.contains(SATISFACTION_LINE));
        assert!(!p.user_text.contains(EXAMPLES_TITLE));
        for r in d.records() {
            assert_eq!(p.user_text.matches(r.id.as_str()).count(), 1);
        }
        assert!(p.user_text.contains("exactly 20 lines"));
        assert!(p.system_text.contains("unique and non-repetitive"));
        assert!(!p.system_text.contains("{{"));
        assert_eq!(p, render_zero_shot(d.records(), d.schema(), false).unwrap());
    }

    #[test]
    fn categorical_values_use_labels() {
        let d = data(1);
        let p = render_zero_shot(d.records(), d.schema(), false).unwrap();
        let v = d.schema().get("commuting_mode").unwrap();
        let code = d.records()[0].value(d.schema(), "commuting_mode").unwrap() as i64;
        let label = &v.categories[v.category_index(code).unwrap()].label;
        assert!(p.user_text.contains(&format!("- Commuting mode: {label}\n")));
        assert!(p.user_text.contains("- Age (years): "));
        for dim in Dimension::ALL {
            assert!(p.user_text.contains(dim.heading()));
        }
    }

    #[test]
    fn few_shot_guards() {
        let d = data(16);
        let support = SupportSet::from_indices(&d, vec![0, 1, 2, 3, 4, 5], SupportProvenance::SimilarityRanked);
        let p = render_few_shot(&support, &d.records()[6..], d.schema(), true).unwrap();
        assert_eq!(p.user_text.matches("[Example ").count(), 6);
        assert_eq!(p.user_text.matches("[Respondent ").count(), 10);
        assert_eq!(p.user_text.matches(SATISFACTION_LINE).count(), 6);
        assert!(p.system_text.contains(IMPORTANCE_FENCE));
        assert!(matches!(
            render_few_shot(&support, &d.records()[5..], d.schema(), false),
            Err(PromptError::Contamination(ids)) if ids == vec![d.records()[5].id.clone()]
        ));
        let empty = SupportSet::empty(SupportProvenance::SimilarityRanked);
        assert_eq!(
            render_few_shot(&empty, d.records(), d.schema(), false),
            Err(PromptError::NoSupport)
        );
        assert_eq!(render_zero_shot(&[], d.schema(), false), Err(PromptError::NoQueries));
    }

    #[test]
    fn invalid_records_are_rejected() {
        let d = data(2);
        let mut r = d.records()[0].clone();
        r.values.pop();
        assert!(matches!(
            render_zero_shot(&[r], d.schema(), false),
            Err(PromptError::Record(_))
        ));
        let mut r = d.records()[0].clone();
        r.id = "a b".into();
        assert!(matches!(
            render_zero_shot(&[r], d.schema(), false),
            Err(PromptError::BadId(_))
        ));
        let twice = [d.records()[0].clone(), d.records()[0].clone()];
        assert!(matches!(
            render_zero_shot(&twice, d.schema(), false),
            Err(PromptError::DuplicateId(_))
        ));
    }
}
