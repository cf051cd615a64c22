//! CSV ingestion and export.
//!
//! A survey file has a header row naming every schema variable, plus either a
//! `satisfaction` column or the nine item columns `sts_1` .. `sts_9`. An `id`
//! column is optional; without it records are numbered `r1`, `r2`, ... in file
//! order. Rows with any blank required field are dropped and counted.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::record::{compute_satisfaction, SatisfactionItems, STS_ITEM_COUNT};
use super::{Dataset, DatasetError, RespondentRecord, VariableSchema};

enum LabelSource {
    Direct(usize),
    Items(Vec<usize>),
}

pub fn load_survey(path: &Path, schema: Arc<VariableSchema>) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_survey(file, schema)
}

pub fn read_survey<R: Read>(reader: R, schema: Arc<VariableSchema>) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Schema(format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let mut columns = Vec::with_capacity(schema.len());
    for v in &schema.variables {
        let idx = find(&v.name).ok_or_else(|| DatasetError::Schema(format!("missing required column `{}`", v.name)))?;
        columns.push(idx);
    }
    let label = if let Some(idx) = find(&schema.label) {
        LabelSource::Direct(idx)
    } else {
        let items: Option<Vec<usize>> = (1..=STS_ITEM_COUNT).map(|i| find(&format!("sts_{i}"))).collect();
        match items {
            Some(items) => LabelSource::Items(items),
            None => {
                return Err(DatasetError::Schema(format!(
                    "missing label column `{}` (or item columns sts_1..sts_{STS_ITEM_COUNT})",
                    schema.label
                )))
            }
        }
    };
    let id_col = find("id");

    let mut records = Vec::new();
    let mut dropped = 0usize;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| DatasetError::Row {
            row: row_no,
            reason: e.to_string(),
        })?;
        let required: Vec<usize> = match &label {
            LabelSource::Direct(l) => columns.iter().copied().chain([*l]).collect(),
            LabelSource::Items(items) => columns.iter().copied().chain(items.iter().copied()).collect(),
        };
        if required.iter().any(|&c| row.get(c).is_none_or(str::is_empty)) {
            dropped += 1;
            continue;
        }
        let parse = |c: usize, what: &str| -> Result<f64, DatasetError> {
            let raw = &row[c];
            raw.parse::<f64>().map_err(|_| DatasetError::Row {
                row: row_no,
                reason: format!("`{what}`: cannot parse `{raw}` as a number"),
            })
        };
        let mut values = Vec::with_capacity(columns.len());
        for (v, &c) in schema.variables.iter().zip(&columns) {
            let x = parse(c, &v.name)?;
            v.validate(x)
                .map_err(|reason| DatasetError::Row { row: row_no, reason })?;
            values.push(x);
        }
        let satisfaction = match &label {
            LabelSource::Direct(c) => parse(*c, &schema.label)?,
            LabelSource::Items(items) => {
                let mut raw = Vec::with_capacity(STS_ITEM_COUNT);
                for (k, &c) in items.iter().enumerate() {
                    let x = parse(c, &format!("sts_{}", k + 1))?;
                    if x.fract() != 0.0 {
                        return Err(DatasetError::Row {
                            row: row_no,
                            reason: format!("sts_{}: item {x} is not an integer", k + 1),
                        });
                    }
                    raw.push(x as i64);
                }
                let items = SatisfactionItems::new(&raw).map_err(|e| DatasetError::Row {
                    row: row_no,
                    reason: e.to_string(),
                })?;
                compute_satisfaction(&items)
            }
        };
        let id = match id_col {
            Some(c) if !row[c].is_empty() => row[c].to_string(),
            _ => format!("r{row_no}"),
        };
        let record = RespondentRecord {
            id,
            values,
            satisfaction,
        };
        record.validate(&schema).map_err(|e| DatasetError::Row {
            row: row_no,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(Dataset::new(schema, records)?.with_dropped(dropped))
}

/// Formats a value the way it is written to CSV and prompts: categorical
/// codes as integers, numerics in shortest round-trip form.
pub fn format_value(x: f64, categorical: bool) -> String {
    if categorical {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

pub fn write_survey<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DatasetError> {
    let schema = dataset.schema();
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DatasetError::Config(format!("csv write failed: {e}"));
    let mut header = vec!["id".to_string()];
    header.extend(schema.names());
    header.push(schema.label.clone());
    wtr.write_record(&header).map_err(csv_err)?;
    for r in dataset.records() {
        let mut row = vec![r.id.clone()];
        row.extend(
            schema
                .variables
                .iter()
                .zip(&r.values)
                .map(|(v, &x)| format_value(x, v.is_categorical())),
        );
        row.push(format!("{}", r.satisfaction));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| DatasetError::Config(format!("csv write failed: {e}")))?;
    Ok(())
}

pub fn save_survey(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    write_survey(dataset, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(schema: &VariableSchema) -> String {
        let mut h = vec!["id".to_string()];
        h.extend(schema.names());
        h.push("satisfaction".into());
        h.join(",")
    }

    // gender, age, income, education, car, 5 walks, ctime, cmode, trips, ptime, pmode, peer time, peer mode
    const ROW: &str = "0,35,20000,5,0,8,10,20,15,12,30,3,5,25,5,28,6";

    fn row(id: &str, body: &str, sat: &str) -> String {
        format!("{id},{body},{sat}")
    }

    #[test]
    fn loads_complete_rows() {
        let schema = Arc::new(VariableSchema::default_survey());
        let text = format!(
            "{}\n{}\n{}\n{}\n",
            header(&schema),
            row("a", ROW, "4.5"),
            row("b", ROW, "3"),
            row("c", ROW, "7")
        );
        let ds = read_survey(text.as_bytes(), schema).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dropped(), 0);
        assert_eq!(ds.records()[1].id, "b");
    }

    #[test]
    fn drops_incomplete_rows() {
        let schema = Arc::new(VariableSchema::default_survey());
        let missing_income = ROW.replacen(",20000,", ",,", 1);
        let text = format!(
            "{}\n{}\n{}\n{}\n",
            header(&schema),
            row("a", ROW, "4.5"),
            row("b", &missing_income, "3"),
            row("c", ROW, "7")
        );
        let ds = read_survey(text.as_bytes(), schema).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dropped(), 1);
    }

    #[test]
    fn rejects_undeclared_mode_code() {
        let schema = Arc::new(VariableSchema::default_survey());
        let bad = ROW.replacen(",30,3,", ",30,12,", 1);
        let text = format!("{}\n{}\n{}\n", header(&schema), row("a", ROW, "4"), row("b", &bad, "4"));
        match read_survey(text.as_bytes(), schema) {
            Err(DatasetError::Row { row, reason }) => {
                assert_eq!(row, 2);
                assert!(reason.contains("commuting_mode"), "{reason}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_empty_file() {
        let schema = Arc::new(VariableSchema::default_survey());
        let text = "id,gender,satisfaction\na,0,4\n";
        assert!(matches!(
            read_survey(text.as_bytes(), schema.clone()),
            Err(DatasetError::Schema(_))
        ));

        let text = format!("{}\n", header(&schema));
        assert!(matches!(read_survey(text.as_bytes(), schema), Err(DatasetError::Empty)));
    }

    #[test]
    fn unparseable_value_reports_row() {
        let schema = Arc::new(VariableSchema::default_survey());
        let bad = ROW.replacen("35", "thirty", 1);
        let text = format!("{}\n{}\n", header(&schema), row("a", &bad, "4"));
        assert!(matches!(
            read_survey(text.as_bytes(), schema),
            Err(DatasetError::Row { row: 1, .. })
        ));
    }

    #[test]
    fn item_columns_average_into_label() {
        let schema = Arc::new(VariableSchema::default_survey());
        let mut h = schema.names();
        h.extend((1..=9).map(|i| format!("sts_{i}")));
        let text = format!("{}\n{},1,2,3,4,5,6,7,1,7\n", h.join(","), ROW);
        let ds = read_survey(text.as_bytes(), schema).unwrap();
        assert_eq!(ds.records()[0].satisfaction, 4.0);
        assert_eq!(ds.records()[0].id, "r1");
    }
}
