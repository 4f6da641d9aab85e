//! Tabular datasets: schemas, encoding, CSV loading, splitting and the
//! attack-set samplers for the three data-knowledge assumptions.

mod instance;
mod load;
mod marginal;
mod sample;
mod schema;
mod split;
pub mod synthetic;

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

pub use instance::{Instance, RawValue};
pub(crate) use instance::project_in_place;
pub use load::{load_dataset, load_dataset_with_report, LoadReport};
pub use marginal::{FeatureMarginal, MarginalModel, HISTOGRAM_BINS};
pub use sample::{sample_attack_set, DataKnowledge};
pub use schema::{FeatureSchema, FeatureSpec, Segment};
pub use split::{split, SplitSpec};

use crate::error::{Error, Result};

/// Labeled instances sharing one schema. Labels are 0/1, 1 being the
/// schema's positive label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<FeatureSchema>,
    instances: Vec<Instance>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: Arc<FeatureSchema>, instances: Vec<Instance>, labels: Vec<u8>) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: instances.len(),
                got: labels.len(),
            });
        }
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Schema(format!("label {bad} is not binary")));
        }
        let dim = schema.encoded_dim();
        if let Some(x) = instances.iter().find(|x| x.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.dim(),
            });
        }
        Ok(Dataset {
            schema,
            instances,
            labels,
        })
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    /// Always false; a `Dataset` cannot be empty.
    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Number of rows with label 0 and with label 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn require_both_classes(&self) -> Result<()> {
        match self.class_counts() {
            [0, _] => Err(Error::SingleClass(1)),
            [_, 0] => Err(Error::SingleClass(0)),
            _ => Ok(()),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.schema.clone(),
            indices.iter().map(|&i| self.instances[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Encoded design matrix, one row per instance.
    pub fn encoded_matrix(&self) -> Array2<f64> {
        encoded_matrix(&self.instances, self.schema.encoded_dim())
    }

    /// Writes the dataset in raw units with a header row, in the format
    /// accepted by [`load_dataset`].
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.schema.features().iter().map(|f| f.name()).collect();
        header.push(self.schema.target_name());
        w.write_record(&header)?;
        let negative = negative_label(&self.schema);
        for (x, &y) in self.instances.iter().zip(&self.labels) {
            let mut record: Vec<String> = x.raw.iter().map(|v| v.to_string()).collect();
            record.push(if y == 1 {
                self.schema.positive_label().to_string()
            } else {
                negative.clone()
            });
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Label written for the negative class when exporting. Numeric positive
/// labels ("1") get "0"; anything else gets "not <positive>".
fn negative_label(schema: &FeatureSchema) -> String {
    match schema.positive_label() {
        "1" => "0".into(),
        "true" => "false".into(),
        other => format!("not {other}"),
    }
}

pub(crate) fn encoded_matrix(instances: &[Instance], dim: usize) -> Array2<f64> {
    let mut m = Array2::zeros((instances.len(), dim));
    for (mut row, x) in m.rows_mut().into_iter().zip(instances) {
        row.iter_mut().zip(&x.encoded).for_each(|(r, v)| *r = *v);
    }
    m
}
