use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::instance::{argmax, Instance};
use super::schema::{FeatureSchema, Segment};
use super::Dataset;
use crate::error::{Error, Result};

/// Equal-width bins per continuous feature over the scaled range [0,1].
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub weight: f64,
    pub lo: f64,
    pub hi: f64,
    /// Set when every observation in the bin had the same value; the bin
    /// then samples that value exactly.
    pub point: Option<f64>,
}

/// Empirical distribution of one feature, in encoded units.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMarginal {
    Continuous { bins: Vec<HistogramBin> },
    Categorical { frequencies: Vec<f64> },
}

/// Independent per-feature empirical distributions of a dataset.
#[derive(Debug, Clone)]
pub struct MarginalModel {
    schema: Arc<FeatureSchema>,
    features: Vec<FeatureMarginal>,
    samplers: Vec<WeightedIndex<f64>>,
}

impl MarginalModel {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let schema = data.schema().clone();
        let n = data.len() as f64;
        let mut features = Vec::with_capacity(schema.features().len());
        for seg in schema.segments() {
            features.push(match *seg {
                Segment::Continuous { offset, .. } => {
                    let width = 1.0 / HISTOGRAM_BINS as f64;
                    let mut counts = [0usize; HISTOGRAM_BINS];
                    let mut first: [Option<f64>; HISTOGRAM_BINS] = [None; HISTOGRAM_BINS];
                    let mut constant = [true; HISTOGRAM_BINS];
                    for x in data.instances() {
                        let v = x.encoded[offset];
                        let b = ((v / width) as usize).min(HISTOGRAM_BINS - 1);
                        counts[b] += 1;
                        match first[b] {
                            None => first[b] = Some(v),
                            Some(f) if f != v => constant[b] = false,
                            _ => {}
                        }
                    }
                    let bins = (0..HISTOGRAM_BINS)
                        .map(|b| HistogramBin {
                            weight: counts[b] as f64 / n,
                            lo: b as f64 * width,
                            hi: (b + 1) as f64 * width,
                            point: if constant[b] { first[b] } else { None },
                        })
                        .collect();
                    FeatureMarginal::Continuous { bins }
                }
                Segment::Categorical { offset, width, .. } => {
                    let mut counts = vec![0usize; width];
                    for x in data.instances() {
                        counts[argmax(&x.encoded[offset..offset + width])] += 1;
                    }
                    FeatureMarginal::Categorical {
                        frequencies: counts.iter().map(|&c| c as f64 / n).collect(),
                    }
                }
            });
        }
        let samplers = features
            .iter()
            .map(|f| {
                let weights: Vec<f64> = match f {
                    FeatureMarginal::Continuous { bins } => bins.iter().map(|b| b.weight).collect(),
                    FeatureMarginal::Categorical { frequencies } => frequencies.clone(),
                };
                WeightedIndex::new(weights).expect("non-empty data gives positive total weight")
            })
            .collect();
        Ok(MarginalModel {
            schema,
            features,
            samplers,
        })
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn features(&self) -> &[FeatureMarginal] {
        &self.features
    }

    /// Draws one instance, each feature independently.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let mut encoded = vec![0.0; self.schema.encoded_dim()];
        for ((seg, marginal), sampler) in self.schema.segments().iter().zip(&self.features).zip(&self.samplers) {
            let k = sampler.sample(rng);
            match (*seg, marginal) {
                (Segment::Continuous { offset, .. }, FeatureMarginal::Continuous { bins }) => {
                    let bin = &bins[k];
                    encoded[offset] = match bin.point {
                        Some(v) => v,
                        None => rng.random_range(bin.lo..bin.hi),
                    };
                }
                (Segment::Categorical { offset, .. }, FeatureMarginal::Categorical { .. }) => {
                    encoded[offset + k] = 1.0;
                }
                _ => unreachable!("marginals are built per segment"),
            }
        }
        Instance::from_encoded(&self.schema, encoded).expect("dimension matches schema")
    }
}
