use std::sync::Arc;

use crate::dataset::{Dataset, FeatureSchema, Instance, Segment};
use crate::error::{Error, Result};

/// Feature weights of the proximity term.
///
/// The distance between two encoded vectors is
/// `(1/d_cont) * sum_j w_j |a_j - b_j|` over continuous features plus
/// `(w_cat/d_cat) * sum_blocks mismatch`, where a block mismatch is computed
/// as half the L1 distance between the two blocks. On one-hot blocks that is
/// exactly the 0/1 mismatch indicator; on relaxed blocks it is its
/// piecewise-linear extension, so the whole distance is a weighted L1 norm
/// of the difference.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceWeights {
    schema: Arc<FeatureSchema>,
    continuous: Vec<f64>,
    categorical: f64,
    per_coordinate: Vec<f64>,
}

impl DistanceWeights {
    pub fn new(schema: Arc<FeatureSchema>, continuous: Vec<f64>, categorical: f64) -> Result<Self> {
        if continuous.len() != schema.n_continuous() {
            return Err(Error::DimensionMismatch {
                expected: schema.n_continuous(),
                got: continuous.len(),
            });
        }
        if continuous.iter().chain([&categorical]).any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("distance weights must be finite and > 0".into()));
        }
        let n_cont = schema.n_continuous().max(1) as f64;
        let n_cat = schema.n_categorical().max(1) as f64;
        let mut per_coordinate = vec![0.0; schema.encoded_dim()];
        let mut j = 0;
        for seg in schema.segments() {
            match *seg {
                Segment::Continuous { offset, .. } => {
                    per_coordinate[offset] = continuous[j] / n_cont;
                    j += 1;
                }
                Segment::Categorical { offset, width, .. } => {
                    per_coordinate[offset..offset + width].fill(0.5 * categorical / n_cat);
                }
            }
        }
        Ok(DistanceWeights {
            schema,
            continuous,
            categorical,
            per_coordinate,
        })
    }

    /// All continuous weights 1.
    pub fn unit(schema: Arc<FeatureSchema>) -> Self {
        let n = schema.n_continuous();
        DistanceWeights::new(schema, vec![1.0; n], 1.0).expect("unit weights are valid")
    }

    /// Inverse median absolute deviation of each continuous feature over
    /// `train`, measured on the scaled [0,1] values. A zero MAD gets weight 1.
    pub fn from_mad(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let schema = train.schema().clone();
        let weights = schema
            .segments()
            .iter()
            .filter_map(|seg| match *seg {
                Segment::Continuous { offset, .. } => {
                    let column: Vec<f64> = train.instances().iter().map(|x| x.encoded[offset]).collect();
                    let mad = median_absolute_deviation(column);
                    Some(if mad > 0.0 { 1.0 / mad } else { 1.0 })
                }
                Segment::Categorical { .. } => None,
            })
            .collect();
        DistanceWeights::new(schema, weights, 1.0)
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn continuous(&self) -> &[f64] {
        &self.continuous
    }

    pub fn categorical(&self) -> f64 {
        self.categorical
    }

    /// Coefficient of `|a_i - b_i|` for every encoded coordinate.
    pub fn per_coordinate(&self) -> &[f64] {
        &self.per_coordinate
    }

    pub fn distance(&self, a: &Instance, b: &Instance) -> Result<f64> {
        let dim = self.per_coordinate.len();
        for x in [a, b] {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.dim() });
            }
        }
        Ok(self.distance_encoded(&a.encoded, &b.encoded))
    }

    pub(crate) fn distance_encoded(&self, a: &[f64], b: &[f64]) -> f64 {
        self.per_coordinate
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * (x - y).abs())
            .sum()
    }

    /// Adds `scale * d distance(a, b) / d a` to `out`.
    pub(crate) fn add_gradient(&self, a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
        for (o, (w, (x, y))) in out.iter_mut().zip(self.per_coordinate.iter().zip(a.iter().zip(b))) {
            *o += scale * w * sign(x - y);
        }
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn median_absolute_deviation(values: Vec<f64>) -> f64 {
    let m = median(values.clone());
    median(values.into_iter().map(|v| (v - m).abs()).collect())
}
