//! Shared fixtures for the criterion benches.

use cfextract_core::dataset::{synthetic, Dataset};
use cfextract_core::neuralnet::{train, MlpModel, MlpSpec, OptimizerKind};

/// A 16-16 MLP trained on two moons, with its training data.
pub fn moons_target() -> (MlpModel, Dataset) {
    let data = synthetic::two_moons(1000, 0.1, 11).expect("valid generator arguments");
    let spec = MlpSpec {
        learning_rate: 0.01,
        ..MlpSpec::new(vec![16, 16], OptimizerKind::Adam, 0.0, 50).with_seed(5)
    };
    let (model, _) = train(&spec, &data).expect("two moons trains");
    (model, data)
}

/// The hidden 100-75-50 RMSprop recipe.
pub fn wide_spec(epochs: usize) -> MlpSpec {
    MlpSpec::new(vec![100, 75, 50], OptimizerKind::Rmsprop, 0.001, epochs).with_seed(1)
}
