//! Small 2-feature generators for fast tests and smoke runs.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::instance::{Instance, RawValue};
use super::schema::{FeatureSchema, FeatureSpec};
use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub fn two_moons_schema() -> FeatureSchema {
    FeatureSchema::new(
        vec![
            FeatureSpec::Continuous { name: "x1".into(), min: -1.5, max: 2.5 },
            FeatureSpec::Continuous { name: "x2".into(), min: -1.0, max: 1.5 },
        ],
        "label",
        "1",
    )
    .expect("static schema is valid")
    .with_name("two_moons")
}

/// Two interleaving half circles with Gaussian noise; classes alternate so
/// they are balanced.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::EmptyDataset);
    }
    let schema = Arc::new(two_moons_schema());
    let mut rng = seed::rng(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let mut instances = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let t = rng.random_range(0.0..PI);
        let (x, y) = if label == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        let raw = vec![
            RawValue::Number(x + jitter.sample(&mut rng)),
            RawValue::Number(y + jitter.sample(&mut rng)),
        ];
        instances.push(Instance::encode(&schema, raw)?);
        labels.push(label);
    }
    Dataset::new(schema, instances, labels)
}

pub fn linear_schema() -> FeatureSchema {
    FeatureSchema::new(
        vec![
            FeatureSpec::Continuous { name: "x1".into(), min: 0.0, max: 1.0 },
            FeatureSpec::Continuous { name: "x2".into(), min: 0.0, max: 1.0 },
        ],
        "label",
        "1",
    )
    .expect("static schema is valid")
    .with_name("linear")
}

/// Points in the unit square labeled by `x1 + x2 > 1`, with a empty margin
/// of `gap` on each side of the boundary (linearly separable).
pub fn linear(n: usize, gap: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::EmptyDataset);
    }
    let schema = Arc::new(linear_schema());
    let mut rng = seed::rng(seed);
    let mut instances = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while instances.len() < n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let margin = a + b - 1.0;
        if margin.abs() < gap {
            continue;
        }
        instances.push(Instance::encode(&schema, vec![RawValue::Number(a), RawValue::Number(b)])?);
        labels.push(u8::from(margin > 0.0));
    }
    Dataset::new(schema, instances, labels)
}
