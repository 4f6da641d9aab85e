use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Rmsprop,
    Adam,
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_BATCH_SIZE: usize = 32;

fn default_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

/// Architecture and training recipe of a binary MLP classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden_layers: Vec<usize>,
    #[serde(default = "relu")]
    pub hidden_activation: HiddenActivation,
    #[serde(default = "sigmoid")]
    pub output_activation: OutputActivation,
    #[serde(default = "bce")]
    pub loss: Loss,
    pub optimizer: OptimizerKind,
    /// Weight of the L1 penalty on all parameters.
    pub l1_lambda: f64,
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn relu() -> HiddenActivation {
    HiddenActivation::Relu
}
fn sigmoid() -> OutputActivation {
    OutputActivation::Sigmoid
}
fn bce() -> Loss {
    Loss::BinaryCrossEntropy
}

impl MlpSpec {
    pub fn new(hidden_layers: Vec<usize>, optimizer: OptimizerKind, l1_lambda: f64, epochs: usize) -> Self {
        MlpSpec {
            hidden_layers,
            hidden_activation: HiddenActivation::Relu,
            output_activation: OutputActivation::Sigmoid,
            loss: Loss::BinaryCrossEntropy,
            optimizer,
            l1_lambda,
            epochs,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
        }
    }

    /// One of the six reference architectures (ids 1 to 6).
    ///
    /// | id | hidden          | optimizer | L1    | epochs |
    /// |----|-----------------|-----------|-------|--------|
    /// | 1  | 100, 50         | RMSprop   | 0.001 | 100    |
    /// | 2  | 100, 50         | Adam      | 0.01  | 20     |
    /// | 3  | 200, 100, 50, 25| RMSprop   | 0.01  | 20     |
    /// | 4  | 200, 100, 50, 25| Adam      | 0.01  | 20     |
    /// | 5  | 100, 75, 50     | RMSprop   | 0.001 | 100    |
    /// | 6  | 100, 75, 50     | Adam      | 0.01  | 20     |
    pub fn architecture(id: usize) -> Result<Self> {
        use OptimizerKind::*;
        Ok(match id {
            1 => MlpSpec::new(vec![100, 50], Rmsprop, 0.001, 100),
            2 => MlpSpec::new(vec![100, 50], Adam, 0.01, 20),
            3 => MlpSpec::new(vec![200, 100, 50, 25], Rmsprop, 0.01, 20),
            4 => MlpSpec::new(vec![200, 100, 50, 25], Adam, 0.01, 20),
            5 => MlpSpec::new(vec![100, 75, 50], Rmsprop, 0.001, 100),
            6 => MlpSpec::new(vec![100, 75, 50], Adam, 0.01, 20),
            other => return Err(Error::InvalidSpec(format!("no reference architecture {other}"))),
        })
    }

    /// The reference architectures other than `target_id`: the candidates an
    /// adversary without architecture knowledge tries.
    pub fn candidates_excluding(target_id: usize) -> Vec<MlpSpec> {
        (1..=6)
            .filter(|&i| i != target_id)
            .map(|i| MlpSpec::architecture(i).expect("ids 1..=6 exist"))
            .collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() {
            return Err(Error::InvalidSpec("at least one hidden layer is required".into()));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::InvalidSpec("hidden layer widths must be >= 1".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidSpec("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidSpec("learning_rate must be > 0".into()));
        }
        if !(self.l1_lambda.is_finite() && self.l1_lambda >= 0.0) {
            return Err(Error::InvalidSpec("l1_lambda must be >= 0".into()));
        }
        Ok(())
    }

    /// Layer widths from input to the single output unit.
    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 2);
        dims.push(input_dim);
        dims.extend(&self.hidden_layers);
        dims.push(1);
        dims
    }
}
