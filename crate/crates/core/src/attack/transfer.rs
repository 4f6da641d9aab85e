use serde::{Deserialize, Serialize};

use super::oracle::Oracle;
use crate::dataset::{encoded_matrix, Instance};
use crate::error::{Error, Result};
use crate::seed;
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Query,
    Counterfactual,
}

/// Labeled rows the adversary collected from the two APIs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSet {
    pub instances: Vec<Instance>,
    pub labels: Vec<u8>,
    pub provenance: Vec<Provenance>,
    /// Row index of the query each row stems from (itself for queries).
    pub origin: Vec<usize>,
    pub invalid_counterfactuals: usize,
}

impl TransferSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn n_queries(&self) -> usize {
        self.provenance.iter().filter(|&&p| p == Provenance::Query).count()
    }

    pub fn encoded_matrix(&self, dim: usize) -> Array2<f64> {
        encoded_matrix(&self.instances, dim)
    }

    /// Rows at `indices`, keeping provenance but not origins.
    pub(crate) fn select(&self, indices: &[usize]) -> (Array2<f64>, Vec<u8>) {
        let rows: Vec<Instance> = indices.iter().map(|&i| self.instances[i].clone()).collect();
        let dim = self.instances.first().map_or(0, Instance::dim);
        (encoded_matrix(&rows, dim), indices.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Queries both APIs for every instance: each query is added with its
/// predicted label, followed by its valid counterfactuals with their labels.
/// Invalid counterfactuals are dropped and counted. When the oracle's
/// explainer is configured with `k == 0` only predictions are requested.
pub fn build_transfer_set(oracle: &Oracle<'_>, queries: &[Instance], seed: u64) -> Result<TransferSet> {
    if queries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let with_cfs = oracle.cf_config().k > 0;
    let per_query = 1 + oracle.cf_config().k;
    let mut t = TransferSet {
        instances: Vec::with_capacity(queries.len() * per_query),
        labels: Vec::with_capacity(queries.len() * per_query),
        provenance: Vec::with_capacity(queries.len() * per_query),
        origin: Vec::with_capacity(queries.len() * per_query),
        invalid_counterfactuals: 0,
    };
    for (i, x) in queries.iter().enumerate() {
        let label = oracle.predict(x)?;
        let row = t.instances.len();
        t.instances.push(x.clone());
        t.labels.push(label);
        t.provenance.push(Provenance::Query);
        t.origin.push(row);
        if !with_cfs {
            continue;
        }
        let result = oracle.explain(x, seed::derive(seed, i as u64))?;
        for ((c, &l), &valid) in result.counterfactuals.into_iter().zip(&result.labels).zip(&result.valid) {
            if valid {
                t.instances.push(c);
                t.labels.push(l);
                t.provenance.push(Provenance::Counterfactual);
                t.origin.push(row);
            } else {
                t.invalid_counterfactuals += 1;
            }
        }
    }
    Ok(t)
}
