//! Model extraction attacks that exploit counterfactual explanations:
//! tabular data handling, MLP classifiers, a gradient-based counterfactual
//! explainer and the attack and evaluation harness.

pub mod attack;
pub mod dataset;
pub mod error;
pub mod explainer;
pub mod gradcheck;
pub mod metrics;
pub mod neuralnet;
pub mod seed;

pub use attack::{AdversaryConfig, ArchKnowledge, DataKnowledgeKind, Deployment, Scenario, ScenarioReport};
pub use dataset::{Dataset, FeatureSchema, Instance, SplitSpec};
pub use error::{Error, Result};
pub use explainer::{CfConfig, CfResult, DistanceWeights};
pub use metrics::EvalReport;
pub use neuralnet::{MlpModel, MlpSpec, OptimizerKind};
