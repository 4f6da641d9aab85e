//! Model extraction through prediction and counterfactual explanation APIs.

mod oracle;
mod scenario;
mod surrogate;
mod transfer;

pub use oracle::Oracle;
pub use scenario::{
    baseline_config, collect_transfer, fit_surrogate, mean_std, run_baseline, run_scenario, AdversaryConfig,
    DataKnowledgeKind, Deployment, ExtractionOutcome, RepetitionTransfer, Scenario, ScenarioReport, trace_explanations,
};
pub use surrogate::{fit_with_restarts, select_candidate, train_surrogate, ArchKnowledge, HOLDOUT_FRACTION, MAX_RESTARTS};
pub use transfer::{build_transfer_set, Provenance, TransferSet};
