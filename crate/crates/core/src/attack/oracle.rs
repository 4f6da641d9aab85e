use std::sync::atomic::{AtomicUsize, Ordering};

use crate::dataset::Instance;
use crate::error::Result;
use crate::explainer::{generate, CfConfig, CfResult, DistanceWeights};
use crate::neuralnet::MlpModel;

/// Black-box access to a deployed model: a prediction API and an
/// explanation API, each counting its calls. The adversary never sees the
/// model itself.
pub struct Oracle<'a> {
    model: &'a MlpModel,
    weights: &'a DistanceWeights,
    cf_config: CfConfig,
    predictions: AtomicUsize,
    explanations: AtomicUsize,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a MlpModel, weights: &'a DistanceWeights, cf_config: CfConfig) -> Self {
        Oracle {
            model,
            weights,
            cf_config,
            predictions: AtomicUsize::new(0),
            explanations: AtomicUsize::new(0),
        }
    }

    pub fn predict(&self, x: &Instance) -> Result<u8> {
        self.predictions.fetch_add(1, Ordering::Relaxed);
        self.model.predict(x)
    }

    /// Counterfactuals for `x` towards the class the model does not predict.
    pub fn explain(&self, x: &Instance, seed: u64) -> Result<CfResult> {
        self.explanations.fetch_add(1, Ordering::Relaxed);
        generate(self.model, x, &self.cf_config, self.weights, seed)
    }

    pub fn cf_config(&self) -> &CfConfig {
        &self.cf_config
    }

    pub fn prediction_calls(&self) -> usize {
        self.predictions.load(Ordering::Relaxed)
    }

    pub fn explanation_calls(&self) -> usize {
        self.explanations.load(Ordering::Relaxed)
    }
}
