use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::MlpSpec;
use crate::dataset::Instance;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Probabilities are kept strictly inside (0,1).
pub const PROB_FLOOR: f64 = 1e-15;

/// Fully connected layer; `weights` is (inputs x outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn n_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Feed-forward binary classifier: ReLU hidden layers, one sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    spec: MlpSpec,
    input_dim: usize,
    layers: Vec<Dense>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases.
    pub fn initialize<R: Rng + ?Sized>(spec: &MlpSpec, input_dim: usize, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        if input_dim == 0 {
            return Err(Error::InvalidSpec("input dimension must be >= 1".into()));
        }
        let dims = spec.layer_dims(input_dim);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..limit)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(MlpModel {
            spec: spec.clone(),
            input_dim,
            layers,
        })
    }

    /// Builds a model from explicit layers, checking that shapes chain and
    /// end in a single output.
    pub fn from_layers(spec: MlpSpec, input_dim: usize, layers: Vec<Dense>) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims(input_dim);
        if layers.len() != dims.len() - 1 {
            return Err(Error::InvalidSpec(format!(
                "spec implies {} layers, got {}",
                dims.len() - 1,
                layers.len()
            )));
        }
        for (l, (layer, w)) in layers.iter().zip(dims.windows(2)).enumerate() {
            if layer.inputs() != w[0] || layer.outputs() != w[1] || layer.bias.len() != w[1] {
                return Err(Error::InvalidSpec(format!(
                    "layer {l} has shape {}x{} (bias {}), expected {}x{}",
                    layer.inputs(),
                    layer.outputs(),
                    layer.bias.len(),
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(MlpModel {
            spec,
            input_dim,
            layers,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got,
            });
        }
        Ok(())
    }

    /// Pre-activations of every layer for one input; the last entry holds
    /// the single logit.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h: Vec<f64> = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let n_out = layer.outputs();
            let w = layer.weights.as_slice().expect("standard layout");
            let mut z = layer.bias.to_vec();
            for (i, &hi) in h.iter().enumerate() {
                if hi == 0.0 {
                    continue;
                }
                let row = &w[i * n_out..(i + 1) * n_out];
                z.iter_mut().zip(row).for_each(|(zj, wij)| *zj += hi * wij);
            }
            h = if l == last { z.clone() } else { z.iter().map(|v| v.max(0.0)).collect() };
            pre.push(z);
        }
        pre
    }

    pub(crate) fn logit_unchecked(&self, x: &[f64]) -> f64 {
        self.forward_trace(x).last().expect("at least one layer")[0]
    }

    /// Logit and its gradient with respect to the input. The ReLU
    /// derivative at exactly 0 is taken as 0.
    pub(crate) fn logit_and_input_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let pre = self.forward_trace(x);
        let logit = pre.last().expect("at least one layer")[0];
        // d logit / d h for the output layer's input
        let out = self.layers.last().expect("at least one layer");
        let mut grad: Vec<f64> = out.weights.column(0).to_vec();
        for l in (0..self.layers.len() - 1).rev() {
            let layer = &self.layers[l];
            let n_out = layer.outputs();
            let w = layer.weights.as_slice().expect("standard layout");
            let gz: Vec<f64> = grad
                .iter()
                .zip(&pre[l])
                .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
                .collect();
            grad = (0..layer.inputs())
                .map(|i| {
                    w[i * n_out..(i + 1) * n_out]
                        .iter()
                        .zip(&gz)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
        }
        (logit, grad)
    }

    pub fn logit(&self, x: &Instance) -> Result<f64> {
        self.check_dim(x.dim())?;
        Ok(self.logit_unchecked(&x.encoded))
    }

    /// Positive-class probability, strictly inside (0,1).
    pub fn predict_proba(&self, x: &Instance) -> Result<f64> {
        Ok(self.proba_from_logit(self.logit(x)?))
    }

    pub(crate) fn proba_from_logit(&self, logit: f64) -> f64 {
        sigmoid(logit).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
    }

    /// Class prediction: 1 when the probability is at least 0.5.
    pub fn predict(&self, x: &Instance) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }

    pub(crate) fn predict_encoded(&self, x: &[f64]) -> u8 {
        u8::from(self.proba_from_logit(self.logit_unchecked(x)) >= 0.5)
    }

    /// Gradient of the counterfactual hinge loss `max(0, 1 - z * logit(x))`
    /// with respect to `x`, where z = +1 for target class 1 and -1 for 0.
    /// Zero on the flat side of the hinge.
    pub fn input_gradient(&self, x: &[f64], target: u8) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let (logit, grad) = self.logit_and_input_gradient(x);
        let z = if target == 1 { 1.0 } else { -1.0 };
        if 1.0 - z * logit > 0.0 {
            Ok(grad.into_iter().map(|g| -z * g).collect())
        } else {
            Ok(vec![0.0; x.len()])
        }
    }

    /// Logits for a batch of encoded rows.
    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_dim(x.ncols())?;
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            h = h.dot(&layer.weights) + &layer.bias;
            if l != last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(h.index_axis_move(Axis(1), 0))
    }

    /// Class predictions for a batch of encoded rows.
    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(self
            .logits(x)?
            .iter()
            .map(|&z| u8::from(self.proba_from_logit(z) >= 0.5))
            .collect())
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(Dense::n_parameters).sum()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_parameters());
        for layer in &self.layers {
            p.extend(layer.weights.iter());
            p.extend(layer.bias.iter());
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.n_parameters(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(|v| *v = *it.next().unwrap());
        }
        Ok(())
    }

    /// Sum of absolute values of all weights and biases.
    pub fn l1_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.iter().chain(l.bias.iter()).map(|v| v.abs()).sum::<f64>())
            .sum()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&ModelFile::from(self))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile::from(self))?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(text)?.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: MlpSpec,
    input_dim: usize,
    layers: Vec<LayerFile>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            spec: m.spec.clone(),
            input_dim: m.input_dim,
            layers: m
                .layers
                .iter()
                .map(|l| LayerFile {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(f.format_version));
        }
        let layers = f
            .layers
            .into_iter()
            .map(|l| {
                let weights = Array2::from_shape_vec((l.inputs, l.outputs), l.weights)
                    .map_err(|e| Error::InvalidSpec(e.to_string()))?;
                Ok(Dense {
                    weights,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::from_layers(f.spec, f.input_dim, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::OptimizerKind;
    use crate::seed;
    use ndarray::array;
    use proptest::prelude::*;

    fn spec(hidden: Vec<usize>) -> MlpSpec {
        MlpSpec::new(hidden, OptimizerKind::Adam, 0.0, 1)
    }

    fn instance(v: Vec<f64>) -> Instance {
        Instance { encoded: v, raw: vec![] }
    }

    #[test]
    fn zero_network_is_indifferent() {
        let layers = vec![
            Dense { weights: Array2::zeros((2, 3)), bias: Array1::zeros(3) },
            Dense { weights: Array2::zeros((3, 1)), bias: Array1::zeros(1) },
        ];
        let m = MlpModel::from_layers(spec(vec![3]), 2, layers).unwrap();
        let x = instance(vec![0.3, -2.0]);
        assert_eq!(m.predict_proba(&x).unwrap(), 0.5);
        assert_eq!(m.predict(&x).unwrap(), 1);
        assert_eq!(m.input_gradient(&x.encoded, 1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward_pass() {
        // h = relu(0.5*x1 - 1.5*x2 + 0.25); logit = 2*h - 0.5
        let layers = vec![
            Dense { weights: array![[0.5], [-1.5]], bias: array![0.25] },
            Dense { weights: array![[2.0]], bias: array![-0.5] },
        ];
        let m = MlpModel::from_layers(spec(vec![1]), 2, layers).unwrap();
        let x = instance(vec![1.0, 0.1]);
        let h: f64 = 0.5 * 1.0 - 1.5 * 0.1 + 0.25;
        let logit = 2.0 * h - 0.5;
        let expected = 1.0 / (1.0 + (-logit).exp());
        assert!((m.predict_proba(&x).unwrap() - expected).abs() < 1e-12);
        // inactive hidden unit
        let x = instance(vec![0.0, 1.0]);
        let expected = 1.0 / (1.0 + 0.5f64.exp());
        assert!((m.predict_proba(&x).unwrap() - expected).abs() < 1e-12);
        assert_eq!(m.predict(&x).unwrap(), 0);
    }

    #[test]
    fn hinge_flat_region_has_zero_gradient() {
        let layers = vec![
            Dense { weights: array![[1.0], [1.0]], bias: array![0.0] },
            Dense { weights: array![[10.0]], bias: array![0.0] },
        ];
        let m = MlpModel::from_layers(spec(vec![1]), 2, layers).unwrap();
        // logit = 10 * (x1 + x2) = 10 >= 1: deep inside class 1
        assert_eq!(m.input_gradient(&[0.5, 0.5], 1).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.input_gradient(&[0.5, 0.5], 0).unwrap(), vec![10.0, 10.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = MlpModel::initialize(&spec(vec![4]), 3, &mut seed::rng(0)).unwrap();
        assert!(matches!(
            m.predict(&instance(vec![0.0; 2])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(m.input_gradient(&[0.0; 4], 1).is_err());
    }

    #[test]
    fn shapes_must_chain() {
        let layers = vec![
            Dense { weights: Array2::zeros((2, 3)), bias: Array1::zeros(3) },
            Dense { weights: Array2::zeros((4, 1)), bias: Array1::zeros(1) },
        ];
        assert!(MlpModel::from_layers(spec(vec![3]), 2, layers).is_err());
    }

    #[test]
    fn extreme_logits_stay_inside_unit_interval() {
        let layers = vec![
            Dense { weights: array![[1000.0]], bias: array![0.0] },
            Dense { weights: array![[1000.0]], bias: array![0.0] },
        ];
        let m = MlpModel::from_layers(spec(vec![1]), 1, layers).unwrap();
        let p = m.predict_proba(&instance(vec![1.0])).unwrap();
        assert!(p > 0.0 && p < 1.0);
        let layers = vec![
            Dense { weights: array![[1000.0]], bias: array![0.0] },
            Dense { weights: array![[-1000.0]], bias: array![0.0] },
        ];
        let m = MlpModel::from_layers(spec(vec![1]), 1, layers).unwrap();
        let p = m.predict_proba(&instance(vec![1.0])).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn batch_and_single_paths_agree() {
        let m = MlpModel::initialize(&spec(vec![5, 4]), 3, &mut seed::rng(1)).unwrap();
        let x = Array2::from_shape_fn((7, 3), |(i, j)| (i as f64 * 0.3 - j as f64 * 0.7).sin());
        let batch = m.logits(x.view()).unwrap();
        for (row, z) in x.rows().into_iter().zip(batch.iter()) {
            let single = m.logit_unchecked(row.as_slice().unwrap());
            assert!((single - z).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unknown_format_version() {
        let m = MlpModel::initialize(&spec(vec![2]), 2, &mut seed::rng(0)).unwrap();
        let text = m.to_json_string().unwrap().replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(MlpModel::from_json_str(&text), Err(Error::ModelVersion(9))));
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), width in 1usize..6, dim in 1usize..5) {
            let m = MlpModel::initialize(&spec(vec![width, 3]), dim, &mut seed::rng(seed)).unwrap();
            let back = MlpModel::from_json_str(&m.to_json_string().unwrap()).unwrap();
            let a: Vec<u64> = m.parameters().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.parameters().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back, m);
        }

        #[test]
        fn predict_matches_probability_threshold(seed in any::<u64>(), x in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let m = MlpModel::initialize(&spec(vec![4]), 3, &mut seed::rng(seed)).unwrap();
            let x = instance(x);
            let p = m.predict_proba(&x).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert_eq!(m.predict(&x).unwrap() == 1, p >= 0.5);
        }
    }
}
