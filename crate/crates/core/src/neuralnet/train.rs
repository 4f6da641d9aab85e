use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{sigmoid, Dense, MlpModel};
use super::spec::{MlpSpec, OptimizerKind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub const RMSPROP_DECAY: f64 = 0.9;
pub const RMSPROP_EPSILON: f64 = 1e-7;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    /// Mean mini-batch objective (BCE + L1 penalty) per epoch.
    pub epoch_loss: Vec<f64>,
    pub wall_time: Duration,
}

/// Numerically stable binary cross-entropy on a logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-layer gradients in the same shapes as the model's layers.
pub(crate) type LayerGrads = Vec<Dense>;

impl MlpModel {
    /// Training objective on a batch, `mean BCE + l1_lambda * sum |theta|`,
    /// and its gradient with respect to every parameter.
    pub(crate) fn batch_objective(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> (f64, LayerGrads) {
        let layers = self.layers();
        let n = x.nrows() as f64;
        let last = layers.len() - 1;

        // activations[l] is the input of layer l
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
        let mut pre: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
        let mut h = x.to_owned();
        for (l, layer) in layers.iter().enumerate() {
            let z = h.dot(&layer.weights) + &layer.bias;
            let next = if l == last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            activations.push(h);
            pre.push(z);
            h = next;
        }
        let logits = pre[last].column(0);
        let data_loss = logits.iter().zip(y.iter()).map(|(&z, &t)| bce_from_logit(z, t)).sum::<f64>() / n;

        // d loss / d logit = (sigmoid(z) - y) / n
        let mut dz: Array2<f64> = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| (sigmoid(logits[i]) - y[i]) / n);
        let lambda = self.spec().l1_lambda;
        let mut grads: Vec<Dense> = Vec::with_capacity(layers.len());
        for l in (0..layers.len()).rev() {
            let mut gw = activations[l].t().dot(&dz);
            let mut gb = dz.sum_axis(Axis(0));
            if lambda > 0.0 {
                gw.zip_mut_with(&layers[l].weights, |g, w| *g += lambda * sign(*w));
                gb.zip_mut_with(&layers[l].bias, |g, b| *g += lambda * sign(*b));
            }
            if l > 0 {
                let mut dh = dz.dot(&layers[l].weights.t());
                dh.zip_mut_with(&pre[l - 1], |g, z| {
                    if *z <= 0.0 {
                        *g = 0.0
                    }
                });
                dz = dh;
            }
            grads.push(Dense { weights: gw, bias: gb });
        }
        grads.reverse();
        (data_loss + lambda * self.l1_norm(), grads)
    }

    /// Objective and flattened gradient (same order as
    /// [`MlpModel::parameters`]) on encoded rows `x` with 0/1 labels `y`.
    pub fn objective_and_gradient(&self, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<(f64, Vec<f64>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let y: Array1<f64> = y.iter().map(|&v| v as f64).collect();
        let (loss, grads) = self.batch_objective(x, y.view());
        let flat = grads
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
            .collect();
        Ok((loss, flat))
    }
}

enum Optimizer {
    Rmsprop { sq: Vec<(Array2<f64>, Array1<f64>)> },
    Adam { m: Vec<(Array2<f64>, Array1<f64>)>, v: Vec<(Array2<f64>, Array1<f64>)>, t: i32 },
}

fn zeros_like(model: &MlpModel) -> Vec<(Array2<f64>, Array1<f64>)> {
    model
        .layers()
        .iter()
        .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
        .collect()
}

impl Optimizer {
    fn new(kind: OptimizerKind, model: &MlpModel) -> Self {
        match kind {
            OptimizerKind::Rmsprop => Optimizer::Rmsprop { sq: zeros_like(model) },
            OptimizerKind::Adam => Optimizer::Adam {
                m: zeros_like(model),
                v: zeros_like(model),
                t: 0,
            },
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &[Dense], lr: f64) {
        match self {
            Optimizer::Rmsprop { sq } => {
                for ((layer, g), (sw, sb)) in model.layers_mut().iter_mut().zip(grads).zip(sq.iter_mut()) {
                    Zip::from(&mut layer.weights).and(&g.weights).and(sw).for_each(|p, &g, s| rmsprop(p, g, s, lr));
                    Zip::from(&mut layer.bias).and(&g.bias).and(sb).for_each(|p, &g, s| rmsprop(p, g, s, lr));
                }
            }
            Optimizer::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for (((layer, g), (mw, mb)), (vw, vb)) in
                    model.layers_mut().iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut())
                {
                    Zip::from(&mut layer.weights)
                        .and(&g.weights)
                        .and(mw)
                        .and(vw)
                        .for_each(|p, &g, m, v| adam(p, g, m, v, lr, c1, c2));
                    Zip::from(&mut layer.bias)
                        .and(&g.bias)
                        .and(mb)
                        .and(vb)
                        .for_each(|p, &g, m, v| adam(p, g, m, v, lr, c1, c2));
                }
            }
        }
    }
}

fn rmsprop(p: &mut f64, g: f64, s: &mut f64, lr: f64) {
    *s = RMSPROP_DECAY * *s + (1.0 - RMSPROP_DECAY) * g * g;
    *p -= lr * g / (s.sqrt() + RMSPROP_EPSILON);
}

fn adam(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, c1: f64, c2: f64) {
    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPSILON);
}

/// Trains a fresh model on `data` following `spec`. Bit-reproducible for a
/// fixed `spec.seed`.
pub fn train(spec: &MlpSpec, data: &Dataset) -> Result<(MlpModel, TrainReport)> {
    train_on(spec, data.encoded_matrix().view(), data.labels())
}

/// Mini-batch training on encoded rows `x` with 0/1 labels `y`.
pub fn train_on(spec: &MlpSpec, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<(MlpModel, TrainReport)> {
    let started = Instant::now();
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 {
        return Err(Error::SingleClass(0));
    }
    if ones == y.len() {
        return Err(Error::SingleClass(1));
    }

    let mut rng = seed::rng(spec.seed);
    let mut model = MlpModel::initialize(spec, x.ncols(), &mut rng)?;
    let mut optimizer = Optimizer::new(spec.optimizer, &model);
    let targets: Array1<f64> = y.iter().map(|&v| v as f64).collect();
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut epoch_loss = Vec::with_capacity(spec.epochs);

    for epoch in 0..spec.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(spec.batch_size) {
            let xb = x.select(Axis(0), chunk);
            let yb = targets.select(Axis(0), chunk);
            let (loss, grads) = model.batch_objective(xb.view(), yb.view());
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            optimizer.step(&mut model, &grads, spec.learning_rate);
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_loss.push(mean);
    }

    let predictions = model.predict_batch(x)?;
    let correct = predictions.iter().zip(y).filter(|(p, t)| p == t).count();
    Ok((
        model,
        TrainReport {
            final_train_accuracy: correct as f64 / y.len() as f64,
            epoch_loss,
            wall_time: started.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic;

    #[test]
    fn bce_matches_naive_formula() {
        for &(z, y) in &[(0.3f64, 1.0), (-2.0, 0.0), (4.0, 0.0), (-1.0, 1.0)] {
            let p: f64 = 1.0 / (1.0 + (-z).exp());
            let naive = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert!((bce_from_logit(z, y) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let data = synthetic::linear(400, 0.05, 1).unwrap();
        let spec = MlpSpec::new(vec![8], OptimizerKind::Adam, 0.0, 60).with_seed(3);
        let spec = MlpSpec { learning_rate: 0.01, ..spec };
        let (_, report) = train(&spec, &data).unwrap();
        assert!(report.final_train_accuracy >= 0.99, "{}", report.final_train_accuracy);
        assert!(report.epoch_loss.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = synthetic::two_moons(200, 0.1, 1).unwrap();
        for opt in [OptimizerKind::Rmsprop, OptimizerKind::Adam] {
            let spec = MlpSpec::new(vec![6, 4], opt, 0.001, 5).with_seed(9);
            let (a, ra) = train(&spec, &data).unwrap();
            let (b, rb) = train(&spec, &data).unwrap();
            assert_eq!(a, b);
            assert_eq!(ra.epoch_loss, rb.epoch_loss);
        }
    }

    #[test]
    fn l1_shrinks_weights() {
        let data = synthetic::two_moons(300, 0.1, 2).unwrap();
        let base = MlpSpec::new(vec![8, 8], OptimizerKind::Rmsprop, 0.0, 20).with_seed(4);
        let strong = MlpSpec { l1_lambda: 10.0, ..base.clone() };
        let (free, _) = train(&base, &data).unwrap();
        let (sparse, _) = train(&strong, &data).unwrap();
        assert!(sparse.l1_norm() < free.l1_norm());
    }

    #[test]
    fn single_class_is_rejected() {
        let data = synthetic::two_moons(20, 0.1, 2).unwrap();
        let zeros: Vec<usize> = (0..20).step_by(2).collect();
        let only_zero = data.subset(&zeros).unwrap();
        let spec = MlpSpec::new(vec![2], OptimizerKind::Adam, 0.0, 1);
        assert!(matches!(train(&spec, &only_zero), Err(Error::SingleClass(0))));
    }

    #[test]
    fn divergence_is_reported() {
        let data = synthetic::two_moons(64, 0.1, 2).unwrap();
        let spec = MlpSpec::new(vec![4], OptimizerKind::Rmsprop, 0.0, 3);
        let spec = MlpSpec { learning_rate: 1e300, ..spec };
        assert!(matches!(train(&spec, &data), Err(Error::Diverged { .. })));
    }
}
