use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::distance::DistanceWeights;
use super::dpp::jittered_det_and_gradient;
use crate::dataset::{project_in_place, Instance, Segment};
use crate::error::{Error, Result};
use crate::neuralnet::MlpModel;
use crate::seed;

/// Half-width of the uniform noise added to continuous coordinates of x0 to
/// initialize each counterfactual.
pub const INIT_NOISE: f64 = 0.1;
/// Window, in iterations, over which the objective change is measured.
pub const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfLoss {
    /// `max(0, 1 - z * logit)` with z = +1 for class 1 and -1 for class 0.
    #[default]
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfOptimizer {
    /// `c -= step_size * gradient`.
    GradientDescent,
    /// Adam with the usual moment decays, `step_size` as learning rate.
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfConfig {
    pub k: usize,
    /// Proximity weight.
    pub lambda1: f64,
    /// Diversity weight, unused when k == 1.
    pub lambda2: f64,
    /// Weight distances by inverse MAD of the training data.
    pub use_training_data: bool,
    pub max_iters: usize,
    pub step_size: f64,
    pub optimizer: CfOptimizer,
    pub loss_kind: CfLoss,
    pub tolerance: f64,
    /// Keep the per-iteration objective in [`CfResult::trace`].
    pub record_trace: bool,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig {
            k: 1,
            lambda1: 0.5,
            lambda2: 1.0,
            use_training_data: true,
            max_iters: 1000,
            step_size: 0.05,
            optimizer: CfOptimizer::Adam,
            loss_kind: CfLoss::Hinge,
            tolerance: 1e-6,
            record_trace: false,
        }
    }
}

impl CfConfig {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0 && self.lambda2.is_finite() && self.lambda2 >= 0.0) {
            return Err(Error::Config("lambda1 and lambda2 must be finite and >= 0".into()));
        }
        if self.max_iters == 0 || !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config("max_iters must be >= 1 and step_size > 0".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfResult {
    pub counterfactuals: Vec<Instance>,
    /// Model prediction on each returned counterfactual.
    pub labels: Vec<u8>,
    pub valid: Vec<bool>,
    pub desired: u8,
    pub iterations_used: usize,
    /// Objective per iteration; empty unless requested.
    pub trace: Vec<f64>,
}

impl CfResult {
    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

fn hinge_sign(desired: u8) -> f64 {
    if desired == 1 {
        1.0
    } else {
        -1.0
    }
}

/// The joint counterfactual objective for a fixed (model, x0, desired class):
///
/// `(1/k) sum hinge(c_i) + (lambda1/k) sum distance(c_i, x0) - lambda2 * det(K + eps I)`
///
/// with the diversity term present only when k > 1.
pub struct CfObjective<'a> {
    model: &'a MlpModel,
    x0: &'a [f64],
    desired: u8,
    config: &'a CfConfig,
    weights: &'a DistanceWeights,
}

impl<'a> CfObjective<'a> {
    pub fn new(
        model: &'a MlpModel,
        x0: &'a Instance,
        desired: u8,
        config: &'a CfConfig,
        weights: &'a DistanceWeights,
    ) -> Result<Self> {
        let dim = weights.per_coordinate().len();
        if x0.dim() != dim || model.input_dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: if x0.dim() != dim { x0.dim() } else { model.input_dim() },
            });
        }
        if desired > 1 {
            return Err(Error::Precondition(format!("desired class must be 0 or 1, got {desired}")));
        }
        Ok(CfObjective {
            model,
            x0: &x0.encoded,
            desired,
            config,
            weights,
        })
    }

    pub fn value(&self, cfs: &[Vec<f64>]) -> f64 {
        let k = cfs.len() as f64;
        let z = hinge_sign(self.desired);
        let mut total = 0.0;
        for c in cfs {
            let logit = self.model.logit_unchecked(c);
            total += (1.0 - z * logit).max(0.0) / k;
            total += self.config.lambda1 / k * self.weights.distance_encoded(c, self.x0);
        }
        if cfs.len() > 1 {
            let rows: Vec<&[f64]> = cfs.iter().map(Vec::as_slice).collect();
            total -= self.config.lambda2 * jittered_det_and_gradient(&rows, self.weights).0;
        }
        total
    }

    pub fn value_and_gradient(&self, cfs: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let k = cfs.len() as f64;
        let z = hinge_sign(self.desired);
        let mut total = 0.0;
        let mut grads = Vec::with_capacity(cfs.len());
        for c in cfs {
            let (logit, dlogit) = self.model.logit_and_input_gradient(c);
            let margin = 1.0 - z * logit;
            let mut g = if margin > 0.0 {
                total += margin / k;
                dlogit.into_iter().map(|v| -z * v / k).collect()
            } else {
                vec![0.0; c.len()]
            };
            total += self.config.lambda1 / k * self.weights.distance_encoded(c, self.x0);
            self.weights.add_gradient(c, self.x0, self.config.lambda1 / k, &mut g);
            grads.push(g);
        }
        if cfs.len() > 1 {
            let rows: Vec<&[f64]> = cfs.iter().map(Vec::as_slice).collect();
            let (det, dgrads) = jittered_det_and_gradient(&rows, self.weights);
            total -= self.config.lambda2 * det;
            for (g, d) in grads.iter_mut().zip(dgrads) {
                g.iter_mut().zip(d).for_each(|(a, b)| *a -= self.config.lambda2 * b);
            }
        }
        (total, grads)
    }
}

/// Counterfactuals for `x0` towards the class opposite to the model's
/// prediction.
pub fn generate(
    model: &MlpModel,
    x0: &Instance,
    config: &CfConfig,
    weights: &DistanceWeights,
    seed: u64,
) -> Result<CfResult> {
    let current = model.predict(x0)?;
    generate_for(model, x0, 1 - current, config, weights, seed)
}

/// Counterfactuals for `x0` towards `desired`, which must differ from the
/// model's prediction on `x0`.
pub fn generate_for(
    model: &MlpModel,
    x0: &Instance,
    desired: u8,
    config: &CfConfig,
    weights: &DistanceWeights,
    seed: u64,
) -> Result<CfResult> {
    config.validate()?;
    let objective = CfObjective::new(model, x0, desired, config, weights)?;
    if model.predict(x0)? == desired {
        return Err(Error::Precondition(format!(
            "the model already predicts the desired class {desired} for x0"
        )));
    }
    let schema = weights.schema();
    let mut rng = seed::rng(seed);
    let mut cfs: Vec<Vec<f64>> = (0..config.k)
        .map(|_| {
            let mut c = x0.encoded.clone();
            for seg in schema.segments() {
                if let Segment::Continuous { offset, .. } = *seg {
                    c[offset] = (c[offset] + rng.random_range(-INIT_NOISE..=INIT_NOISE)).clamp(0.0, 1.0);
                }
            }
            c
        })
        .collect();

    let n_valid = |cfs: &[Vec<f64>]| {
        cfs.iter()
            .filter(|c| {
                let mut p = (*c).clone();
                project_in_place(schema, &mut p);
                model.predict_encoded(&p) == desired
            })
            .count()
    };

    // Fixed-step descent oscillates around the hinge margin and the relaxed
    // categorical blocks may flip back on projection, so the returned state
    // is the visited one with the most valid projections, then the lowest
    // objective.
    let mut stepper = Stepper::new(config, cfs.len() * x0.dim());
    let mut history: Vec<f64> = Vec::with_capacity(config.max_iters.min(4096));
    let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;
    let mut iterations = 0;
    loop {
        let (value, grads) = objective.value_and_gradient(&cfs);
        if !value.is_finite() {
            break;
        }
        let valid = n_valid(&cfs);
        if best.as_ref().is_none_or(|(v, o, _)| valid > *v || (valid == *v && value < *o)) {
            best = Some((valid, value, cfs.clone()));
        }
        history.push(value);
        if iterations == config.max_iters {
            break;
        }
        if valid == cfs.len()
            && history.len() > CONVERGENCE_WINDOW
            && (value - history[history.len() - 1 - CONVERGENCE_WINDOW]).abs() < config.tolerance
        {
            break;
        }
        stepper.step(&mut cfs, &grads);
        iterations += 1;
    }
    let cfs = best.map_or(cfs, |b| b.2);

    let mut counterfactuals = Vec::with_capacity(config.k);
    let mut labels = Vec::with_capacity(config.k);
    let mut valid = Vec::with_capacity(config.k);
    for c in cfs {
        let inst = Instance::project(schema, c)?;
        let label = model.predict(&inst)?;
        labels.push(label);
        valid.push(label == desired);
        counterfactuals.push(inst);
    }
    Ok(CfResult {
        counterfactuals,
        labels,
        valid,
        desired,
        iterations_used: iterations,
        trace: if config.record_trace { history } else { Vec::new() },
    })
}

struct Stepper {
    kind: CfOptimizer,
    rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Stepper {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPSILON: f64 = 1e-8;

    fn new(config: &CfConfig, n: usize) -> Self {
        Stepper {
            kind: config.optimizer,
            rate: config.step_size,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One update; every coordinate is clipped to [0,1] afterwards.
    fn step(&mut self, cfs: &mut [Vec<f64>], grads: &[Vec<f64>]) {
        match self.kind {
            CfOptimizer::GradientDescent => {
                for (c, g) in cfs.iter_mut().zip(grads) {
                    c.iter_mut()
                        .zip(g)
                        .for_each(|(v, d)| *v = (*v - self.rate * d).clamp(0.0, 1.0));
                }
            }
            CfOptimizer::Adam => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                let values = cfs.iter_mut().flat_map(|c| c.iter_mut());
                let grads = grads.iter().flatten();
                for ((x, g), (m, v)) in values.zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                    *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                    *x = (*x - self.rate * (*m / c1) / ((*v / c2).sqrt() + Self::EPSILON)).clamp(0.0, 1.0);
                }
            }
        }
    }
}

/// Writes objective traces as CSV with columns `query,iteration,objective`.
pub fn write_traces_csv<'r, W: Write>(writer: W, traces: impl IntoIterator<Item = (usize, &'r [f64])>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["query", "iteration", "objective"])?;
    for (query, trace) in traces {
        for (it, v) in trace.iter().enumerate() {
            w.write_record([query.to_string(), it.to_string(), format!("{v:.10e}")])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}
