//! Finite-difference checks of the analytic gradients on random small
//! problems.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::dataset::{FeatureSchema, FeatureSpec, Instance};
use crate::error::Result;
use crate::explainer::{CfConfig, CfObjective, DistanceWeights};
use crate::neuralnet::{MlpModel, MlpSpec, OptimizerKind};
use crate::seed;

pub const STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckSummary {
    pub cases: usize,
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|)` over
    /// cases, both sides taken as vectors (Euclidean norms).
    pub max_relative_error: f64,
}

impl GradcheckSummary {
    fn record(&mut self, analytic: &[f64], numeric: &[f64]) {
        let diff = norm(analytic.iter().zip(numeric).map(|(a, b)| a - b));
        let scale = norm(analytic.iter().copied()).max(norm(numeric.iter().copied()));
        let rel = if scale < 1e-12 { diff } else { diff / scale };
        self.cases += 1;
        self.max_relative_error = self.max_relative_error.max(rel);
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn central_difference(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + STEP;
            let up = f(&p);
            p[i] = orig - STEP;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn random_model<R: Rng>(rng: &mut R, input_dim: usize, l1: f64) -> Result<MlpModel> {
    let depth = rng.random_range(1..=3);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=6)).collect();
    let spec = MlpSpec::new(hidden, OptimizerKind::Adam, l1, 1);
    let mut model = MlpModel::initialize(&spec, input_dim, rng)?;
    // non-zero biases move ReLU kinks away from the origin
    let params: Vec<f64> = model.parameters().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    model.set_parameters(&params)?;
    Ok(model)
}

/// Gradient of the training objective (BCE + L1) with respect to every
/// parameter, on random networks and batches.
pub fn mlp_parameter_gradients(cases: usize, seed: u64) -> Result<GradcheckSummary> {
    let mut rng = seed::rng(seed);
    let mut summary = GradcheckSummary { cases: 0, max_relative_error: 0.0 };
    for _ in 0..cases {
        let dim = rng.random_range(1..=5);
        let l1 = rng.random_range(0.0..0.05);
        let model = random_model(&mut rng, dim, l1)?;
        let n = rng.random_range(1..=8);
        let x = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let (_, analytic) = model.objective_and_gradient(x.view(), &y)?;
        let mut probe = model.clone();
        let numeric = central_difference(&model.parameters(), |p| {
            probe.set_parameters(p).expect("same length");
            probe.objective_and_gradient(x.view(), &y).expect("valid batch").0
        });
        summary.record(&analytic, &numeric);
    }
    Ok(summary)
}

/// Gradient of the counterfactual hinge loss with respect to the input.
pub fn mlp_input_gradients(cases: usize, seed: u64) -> Result<GradcheckSummary> {
    let mut rng = seed::rng(seed);
    let mut summary = GradcheckSummary { cases: 0, max_relative_error: 0.0 };
    while summary.cases < cases {
        let dim = rng.random_range(1..=6);
        let model = random_model(&mut rng, dim, 0.0)?;
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        let target = rng.random_range(0..=1u8);
        let z = if target == 1 { 1.0 } else { -1.0 };
        let logit = model.logit_unchecked(&x);
        if (1.0 - z * logit).abs() < 1e-3 {
            continue;
        }
        let analytic = model.input_gradient(&x, target)?;
        let numeric = central_difference(&x, |p| (1.0 - z * model.logit_unchecked(p)).max(0.0));
        summary.record(&analytic, &numeric);
    }
    Ok(summary)
}

fn random_schema<R: Rng>(rng: &mut R) -> FeatureSchema {
    let n_cont = rng.random_range(1..=3);
    let n_cat = rng.random_range(0..=2);
    let mut features: Vec<FeatureSpec> = (0..n_cont)
        .map(|i| FeatureSpec::Continuous {
            name: format!("x{i}"),
            min: 0.0,
            max: 1.0,
        })
        .collect();
    for j in 0..n_cat {
        let width = rng.random_range(2..=3);
        features.push(FeatureSpec::Categorical {
            name: format!("c{j}"),
            levels: (0..width).map(|l| format!("l{l}")).collect(),
        });
    }
    FeatureSchema::new(features, "y", "1").expect("generated schema is valid")
}

/// Gradient of the full counterfactual objective, including the
/// determinant diversity term, with respect to all counterfactuals.
pub fn cf_objective_gradients(cases: usize, seed: u64) -> Result<GradcheckSummary> {
    let mut rng = seed::rng(seed);
    let mut summary = GradcheckSummary { cases: 0, max_relative_error: 0.0 };
    while summary.cases < cases {
        let schema = Arc::new(random_schema(&mut rng));
        let dim = schema.encoded_dim();
        let model = random_model(&mut rng, dim, 0.0)?;
        let weights = DistanceWeights::new(
            schema.clone(),
            (0..schema.n_continuous()).map(|_| rng.random_range(0.5..3.0)).collect(),
            rng.random_range(0.5..2.0),
        )?;
        let x0 = Instance::project(&schema, (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())?;
        let config = CfConfig {
            k: rng.random_range(1..=4),
            lambda1: rng.random_range(0.0..3.0),
            lambda2: rng.random_range(0.0..3.0),
            ..CfConfig::default()
        };
        let desired = rng.random_range(0..=1u8);
        let objective = CfObjective::new(&model, &x0, desired, &config, &weights)?;
        let cfs: Vec<Vec<f64>> = (0..config.k)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        // skip draws within one step of a hinge or absolute-value kink
        let z = if desired == 1 { 1.0 } else { -1.0 };
        let near_hinge = cfs.iter().any(|c| (1.0 - z * model.logit_unchecked(c)).abs() < 1e-3);
        let near_abs = cfs.iter().enumerate().any(|(i, c)| {
            c.iter().zip(&x0.encoded).any(|(a, b)| (a - b).abs() < 1e-3)
                || cfs[..i].iter().any(|o| o.iter().zip(c).any(|(a, b)| (a - b).abs() < 1e-3))
        });
        if near_hinge || near_abs {
            continue;
        }
        let (_, grads) = objective.value_and_gradient(&cfs);
        let analytic: Vec<f64> = grads.concat();
        let flat: Vec<f64> = cfs.concat();
        let numeric = central_difference(&flat, |p| {
            let rows: Vec<Vec<f64>> = p.chunks(dim).map(<[f64]>::to_vec).collect();
            objective.value(&rows)
        });
        summary.record(&analytic, &numeric);
    }
    Ok(summary)
}
