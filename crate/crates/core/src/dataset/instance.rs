use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureSchema, FeatureSpec, Segment};
use crate::error::{Error, Result};

/// A feature value in the dataset's original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawValue {
    Number(f64),
    Level(String),
}

impl fmt::Display for RawValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawValue::Number(v) => write!(f, "{v}"),
            RawValue::Level(l) => f.write_str(l),
        }
    }
}

/// A point of the input space, held both in model (encoded) form and in
/// original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub encoded: Vec<f64>,
    pub raw: Vec<RawValue>,
}

impl Instance {
    /// Encodes raw values. Continuous values are clipped to the schema bounds
    /// before scaling; unknown categorical levels are an error.
    pub fn encode(schema: &FeatureSchema, raw: Vec<RawValue>) -> Result<Self> {
        let features = schema.features();
        if raw.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: raw.len(),
            });
        }
        let mut encoded = vec![0.0; schema.encoded_dim()];
        let mut raw = raw;
        for (seg, value) in schema.segments().iter().zip(raw.iter_mut()) {
            match (*seg, &features[seg.feature()], &*value) {
                (Segment::Continuous { offset, .. }, FeatureSpec::Continuous { min, max, .. }, RawValue::Number(v)) => {
                    let clipped = v.clamp(*min, *max);
                    encoded[offset] = (clipped - min) / (max - min);
                    *value = RawValue::Number(clipped);
                }
                (Segment::Categorical { offset, .. }, FeatureSpec::Categorical { name, levels }, RawValue::Level(l)) => {
                    let idx = levels.iter().position(|x| x == l).ok_or_else(|| {
                        Error::Schema(format!("unknown level `{l}` for feature `{name}`"))
                    })?;
                    encoded[offset + idx] = 1.0;
                }
                (_, f, v) => {
                    return Err(Error::Schema(format!(
                        "value `{v}` has the wrong kind for feature `{}`",
                        f.name()
                    )))
                }
            }
        }
        Ok(Instance { encoded, raw })
    }

    /// Builds an instance from an encoded vector, recovering raw values.
    /// Categorical blocks decode to their argmax level; the encoded vector is
    /// kept as given (use [`Instance::project`] to snap it).
    pub fn from_encoded(schema: &FeatureSchema, encoded: Vec<f64>) -> Result<Self> {
        if encoded.len() != schema.encoded_dim() {
            return Err(Error::DimensionMismatch {
                expected: schema.encoded_dim(),
                got: encoded.len(),
            });
        }
        let raw = decode(schema, &encoded);
        Ok(Instance { encoded, raw })
    }

    /// Clips continuous coordinates to [0,1] and snaps every categorical block
    /// to a one-hot vector at its argmax (first index on ties).
    pub fn project(schema: &FeatureSchema, mut encoded: Vec<f64>) -> Result<Self> {
        if encoded.len() != schema.encoded_dim() {
            return Err(Error::DimensionMismatch {
                expected: schema.encoded_dim(),
                got: encoded.len(),
            });
        }
        project_in_place(schema, &mut encoded);
        Instance::from_encoded(schema, encoded)
    }

    pub fn dim(&self) -> usize {
        self.encoded.len()
    }
}

pub(crate) fn project_in_place(schema: &FeatureSchema, encoded: &mut [f64]) {
    for seg in schema.segments() {
        match *seg {
            Segment::Continuous { offset, .. } => {
                encoded[offset] = encoded[offset].clamp(0.0, 1.0);
            }
            Segment::Categorical { offset, width, .. } => {
                let block = &mut encoded[offset..offset + width];
                let best = argmax(block);
                block.iter_mut().enumerate().for_each(|(i, v)| *v = if i == best { 1.0 } else { 0.0 });
            }
        }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn decode(schema: &FeatureSchema, encoded: &[f64]) -> Vec<RawValue> {
    schema
        .segments()
        .iter()
        .map(|seg| match (*seg, &schema.features()[seg.feature()]) {
            (Segment::Continuous { offset, .. }, FeatureSpec::Continuous { min, max, .. }) => {
                RawValue::Number(min + encoded[offset].clamp(0.0, 1.0) * (max - min))
            }
            (Segment::Categorical { offset, width, .. }, FeatureSpec::Categorical { levels, .. }) => {
                RawValue::Level(levels[argmax(&encoded[offset..offset + width])].clone())
            }
            _ => unreachable!("segment kinds mirror feature kinds"),
        })
        .collect()
}
