use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One column of a tabular dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Continuous { name: String, min: f64, max: f64 },
    Categorical { name: String, levels: Vec<String> },
}

impl FeatureSpec {
    pub fn name(&self) -> &str {
        match self {
            FeatureSpec::Continuous { name, .. } | FeatureSpec::Categorical { name, .. } => name,
        }
    }

    /// Width of this feature in the encoded vector.
    pub fn width(&self) -> usize {
        match self {
            FeatureSpec::Continuous { .. } => 1,
            FeatureSpec::Categorical { levels, .. } => levels.len(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureSpec::Categorical { .. })
    }
}

/// Position of one feature inside the encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Continuous { feature: usize, offset: usize },
    Categorical { feature: usize, offset: usize, width: usize },
}

impl Segment {
    pub fn feature(&self) -> usize {
        match *self {
            Segment::Continuous { feature, .. } | Segment::Categorical { feature, .. } => feature,
        }
    }
}

/// On-disk form of a schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    #[serde(default = "default_version")]
    version: u32,
    target_name: String,
    positive_label: String,
    features: Vec<FeatureSpec>,
}

fn default_version() -> u32 {
    1
}

/// Declarative description of a dataset's features. Drives encoding,
/// decoding and attack-set sampling.
///
/// Continuous features are min-max scaled with the schema bounds (never with
/// per-split statistics), categorical features are one-hot encoded in level
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct FeatureSchema {
    name: String,
    version: u32,
    target_name: String,
    positive_label: String,
    features: Vec<FeatureSpec>,
    segments: Vec<Segment>,
    encoded_dim: usize,
    n_continuous: usize,
    n_categorical: usize,
}

impl TryFrom<SchemaFile> for FeatureSchema {
    type Error = Error;

    fn try_from(file: SchemaFile) -> Result<Self> {
        let mut schema =
            FeatureSchema::new(file.features, file.target_name, file.positive_label)?;
        schema.name = file.name;
        schema.version = file.version;
        Ok(schema)
    }
}

impl From<FeatureSchema> for SchemaFile {
    fn from(s: FeatureSchema) -> Self {
        SchemaFile {
            name: s.name,
            version: s.version,
            target_name: s.target_name,
            positive_label: s.positive_label,
            features: s.features,
        }
    }
}

impl FeatureSchema {
    pub fn new(
        features: Vec<FeatureSpec>,
        target_name: impl Into<String>,
        positive_label: impl Into<String>,
    ) -> Result<Self> {
        let target_name = target_name.into();
        if features.is_empty() {
            return Err(Error::Schema("no features".into()));
        }
        let mut names = HashSet::new();
        for f in &features {
            if !names.insert(f.name()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name())));
            }
            match f {
                FeatureSpec::Continuous { name, min, max } => {
                    if !(min.is_finite() && max.is_finite() && min < max) {
                        return Err(Error::Schema(format!(
                            "continuous feature `{name}` needs finite min < max, got [{min}, {max}]"
                        )));
                    }
                }
                FeatureSpec::Categorical { name, levels } => {
                    if levels.is_empty() {
                        return Err(Error::Schema(format!("categorical feature `{name}` has no levels")));
                    }
                    let mut seen = HashSet::new();
                    for l in levels {
                        if !seen.insert(l.as_str()) {
                            return Err(Error::Schema(format!(
                                "categorical feature `{name}` repeats level `{l}`"
                            )));
                        }
                    }
                }
            }
        }
        if names.contains(target_name.as_str()) {
            return Err(Error::Schema(format!("target `{target_name}` is also a feature")));
        }

        let mut segments = Vec::with_capacity(features.len());
        let mut offset = 0;
        for (feature, f) in features.iter().enumerate() {
            segments.push(match f {
                FeatureSpec::Continuous { .. } => Segment::Continuous { feature, offset },
                FeatureSpec::Categorical { levels, .. } => Segment::Categorical {
                    feature,
                    offset,
                    width: levels.len(),
                },
            });
            offset += f.width();
        }
        let n_categorical = features.iter().filter(|f| f.is_categorical()).count();
        Ok(FeatureSchema {
            name: String::new(),
            version: 1,
            target_name,
            positive_label: positive_label.into(),
            n_continuous: features.len() - n_categorical,
            n_categorical,
            features,
            segments,
            encoded_dim: offset,
        })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    /// Length of the encoded vector.
    pub fn encoded_dim(&self) -> usize {
        self.encoded_dim
    }

    pub fn n_continuous(&self) -> usize {
        self.n_continuous
    }

    pub fn n_categorical(&self) -> usize {
        self.n_categorical
    }
}
