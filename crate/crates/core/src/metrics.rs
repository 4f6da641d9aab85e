//! Agreement and accuracy of classifiers on reference sets.

use serde::{Deserialize, Serialize};

use crate::dataset::{encoded_matrix, Dataset, Instance};
use crate::error::{Error, Result};
use crate::neuralnet::MlpModel;

fn predictions(model: &MlpModel, xs: &[Instance]) -> Result<Vec<u8>> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    model.predict_batch(encoded_matrix(xs, model.input_dim()).view())
}

/// Fraction of `a` entries equal to `b`.
pub fn agreement(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64)
}

/// Fraction of `reference` on which both models predict the same class.
pub fn fidelity(surrogate: &MlpModel, target: &MlpModel, reference: &[Instance]) -> Result<f64> {
    agreement(&predictions(surrogate, reference)?, &predictions(target, reference)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    /// Accuracy restricted to true class 0 and true class 1. A class absent
    /// from the data scores 1.0.
    pub per_class: [f64; 2],
}

pub fn accuracy_of(predicted: &[u8], truth: &[u8]) -> Result<AccuracyReport> {
    let accuracy = agreement(predicted, truth)?;
    let mut hits = [0usize; 2];
    let mut counts = [0usize; 2];
    for (&p, &t) in predicted.iter().zip(truth) {
        let c = usize::from(t == 1);
        counts[c] += 1;
        hits[c] += usize::from(p == t);
    }
    let rate = |c: usize| if counts[c] == 0 { 1.0 } else { hits[c] as f64 / counts[c] as f64 };
    Ok(AccuracyReport {
        accuracy,
        per_class: [rate(0), rate(1)],
    })
}

pub fn accuracy(model: &MlpModel, data: &Dataset) -> Result<AccuracyReport> {
    accuracy_of(&predictions(model, data.instances())?, data.labels())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fidelity: f64,
    pub accuracy: f64,
    pub n_reference: usize,
    pub per_class_accuracy: [f64; 2],
}

/// Fidelity of `surrogate` to `target` and its accuracy, both on `reference`.
pub fn evaluate(surrogate: &MlpModel, target: &MlpModel, reference: &Dataset) -> Result<EvalReport> {
    let s = predictions(surrogate, reference.instances())?;
    let t = predictions(target, reference.instances())?;
    evaluate_predictions(&s, &t, reference.labels())
}

pub(crate) fn evaluate_predictions(surrogate: &[u8], target: &[u8], truth: &[u8]) -> Result<EvalReport> {
    let acc = accuracy_of(surrogate, truth)?;
    Ok(EvalReport {
        fidelity: agreement(surrogate, target)?,
        accuracy: acc.accuracy,
        n_reference: truth.len(),
        per_class_accuracy: acc.per_class,
    })
}

/// Percentage with two decimals, as reported in tables.
pub fn percent(rate: f64) -> String {
    format!("{:.2}", 100.0 * rate)
}
