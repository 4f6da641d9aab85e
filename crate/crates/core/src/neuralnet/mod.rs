//! Feed-forward binary classifiers: recipes (`MlpSpec`), model and training.

mod model;
mod spec;
mod train;

pub use model::{Dense, MlpModel, MODEL_FORMAT_VERSION, PROB_FLOOR};
pub use spec::{
    HiddenActivation, Loss, MlpSpec, OptimizerKind, OutputActivation, DEFAULT_BATCH_SIZE, DEFAULT_LEARNING_RATE,
};
pub use train::{train, train_on, TrainReport};
