use std::path::Path;
use std::sync::Arc;

use super::instance::{Instance, RawValue};
use super::schema::{FeatureSchema, FeatureSpec};
use super::Dataset;
use crate::error::{Error, Result, RowError, RowReport};

/// Bookkeeping from a successful load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_missing: usize,
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "NaN" | "nan" | "null")
}

/// Loads a comma-separated file with a header row and encodes every row
/// with `schema`. See [`load_dataset_with_report`].
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    load_dataset_with_report(path, schema).map(|(d, _)| d)
}

/// Loads and encodes a CSV file.
///
/// Rows with a missing value in a used column are dropped and counted. Rows
/// with an unknown categorical level or an unparsable number are rejected:
/// if any are found the whole load fails with a report listing them.
pub fn load_dataset_with_report(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_cols = schema
        .features()
        .iter()
        .map(|f| column(f.name()))
        .collect::<Result<Vec<_>>>()?;
    let target_col = column(schema.target_name())?;

    let mut instances = Vec::new();
    let mut labels = Vec::new();
    let mut rejected = Vec::new();
    let mut dropped_missing = 0;
    let mut rows_read = 0;

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        rows_read += 1;

        let fields: Vec<&str> = feature_cols.iter().map(|&c| record.get(c).unwrap_or("")).collect();
        let target = record.get(target_col).unwrap_or("");
        if is_missing(target) || fields.iter().any(|f| is_missing(f)) {
            dropped_missing += 1;
            continue;
        }

        let mut raw = Vec::with_capacity(fields.len());
        let mut row_ok = true;
        for (f, field) in schema.features().iter().zip(&fields) {
            match f {
                FeatureSpec::Continuous { name, .. } => match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => raw.push(RawValue::Number(v)),
                    _ => {
                        rejected.push(RowError {
                            row,
                            column: name.clone(),
                            reason: format!("`{field}` is not a finite number"),
                        });
                        row_ok = false;
                    }
                },
                FeatureSpec::Categorical { name, levels } => {
                    if levels.iter().any(|l| l == field) {
                        raw.push(RawValue::Level(field.to_string()));
                    } else {
                        rejected.push(RowError {
                            row,
                            column: name.clone(),
                            reason: format!("unknown level `{field}`"),
                        });
                        row_ok = false;
                    }
                }
            }
        }
        if !row_ok {
            continue;
        }
        instances.push(Instance::encode(schema, raw)?);
        labels.push(u8::from(target == schema.positive_label()));
    }

    if !rejected.is_empty() {
        return Err(Error::InvalidRows(RowReport {
            rejected,
            dropped_missing,
        }));
    }
    if dropped_missing > 0 {
        log::warn!("{}: dropped {dropped_missing} row(s) with missing values", path.display());
    }
    let dataset = Dataset::new(Arc::new(schema.clone()), instances, labels)?;
    Ok((
        dataset,
        LoadReport {
            rows_read,
            dropped_missing,
        },
    ))
}
