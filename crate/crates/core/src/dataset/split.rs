use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Fractions for the train / test / attack-pool partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub test_frac: f64,
    pub pool_frac: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SplitSpec {
    /// 67% train, 16.5% test, 16.5% attack pool.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train_frac: 0.67,
            test_frac: 0.165,
            pool_frac: 0.165,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.test_frac, self.pool_frac];
        if fracs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidSplit(format!("fractions must be positive, got {fracs:?}")));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// Part sizes for `n` rows: test and pool are rounded, train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let test = (n as f64 * self.test_frac).round() as usize;
        let pool = (n as f64 * self.pool_frac).round() as usize;
        (n.saturating_sub(test + pool), test, pool)
    }
}

/// Shuffles with `spec.seed` and partitions into (train, test, pool).
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let n = data.len();
    if n < 10 {
        return Err(Error::InvalidSplit(format!("need at least 10 rows, got {n}")));
    }
    let (n_train, n_test, n_pool) = spec.sizes(n);
    if n_train == 0 || n_test == 0 || n_pool == 0 {
        return Err(Error::InvalidSplit(format!(
            "degenerate split of {n} rows: ({n_train}, {n_test}, {n_pool})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(spec.seed));

    let train = data.subset(&order[..n_train])?;
    train.require_both_classes()?;
    let test = data.subset(&order[n_train..n_train + n_test])?;
    let pool = data.subset(&order[n_train + n_test..])?;
    Ok((train, test, pool))
}
