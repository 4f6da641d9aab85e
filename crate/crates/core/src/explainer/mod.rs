//! Gradient-based counterfactual explanations with a DPP diversity term.

mod distance;
mod dpp;
mod generate;

pub use distance::DistanceWeights;
pub use dpp::{dpp_diversity, kernel, DPP_JITTER};
pub use generate::{
    generate, generate_for, write_traces_csv, CfConfig, CfLoss, CfOptimizer, CfObjective, CfResult, CONVERGENCE_WINDOW, INIT_NOISE,
};
