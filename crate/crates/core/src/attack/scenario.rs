use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::Oracle;
use super::surrogate::{train_surrogate, ArchKnowledge};
use super::transfer::{build_transfer_set, TransferSet};
use crate::dataset::{sample_attack_set, split, DataKnowledge, Dataset, Instance, MarginalModel, SplitSpec};
use crate::error::{Error, Result};
use crate::explainer::{generate, CfConfig, CfResult, DistanceWeights};
use crate::metrics::{evaluate_predictions, EvalReport};
use crate::neuralnet::{train, MlpModel, MlpSpec, TrainReport};
use crate::seed::{self, stream};

/// A trained target model together with the data splits around it. The
/// training split backs the explainer's MAD weights, the test split is the
/// reference set for evaluation and the pool is the adversary's data.
pub struct Deployment {
    pub model: MlpModel,
    pub train: Dataset,
    pub test: Dataset,
    pub pool: Dataset,
    mad: OnceLock<DistanceWeights>,
    test_predictions: OnceLock<Vec<u8>>,
}

impl Deployment {
    pub fn new(model: MlpModel, train: Dataset, test: Dataset, pool: Dataset) -> Result<Self> {
        for d in [&train, &test, &pool] {
            if d.schema().encoded_dim() != model.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.input_dim(),
                    got: d.schema().encoded_dim(),
                });
            }
        }
        if test.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Deployment {
            model,
            train,
            test,
            pool,
            mad: OnceLock::new(),
            test_predictions: OnceLock::new(),
        })
    }

    /// Splits `data` and trains the target on the training part.
    pub fn train_target(data: &Dataset, split_spec: &SplitSpec, spec: &MlpSpec) -> Result<(Self, TrainReport)> {
        let (tr, test, pool) = split(data, split_spec)?;
        let (model, report) = train(spec, &tr)?;
        Ok((Deployment::new(model, tr, test, pool)?, report))
    }

    /// Distance weights of the explanation API.
    pub fn explainer_weights(&self, use_training_data: bool) -> Result<DistanceWeights> {
        if !use_training_data {
            return Ok(DistanceWeights::unit(self.train.schema().clone()));
        }
        if let Some(w) = self.mad.get() {
            return Ok(w.clone());
        }
        let w = DistanceWeights::from_mad(&self.train)?;
        Ok(self.mad.get_or_init(|| w).clone())
    }

    pub fn target_test_predictions(&self) -> &[u8] {
        self.test_predictions.get_or_init(|| {
            self.model
                .predict_batch(self.test.encoded_matrix().view())
                .expect("test split matches the model")
        })
    }

    /// Fidelity and accuracy of `surrogate` on the test split.
    pub fn evaluate(&self, surrogate: &MlpModel) -> Result<EvalReport> {
        let s = surrogate.predict_batch(self.test.encoded_matrix().view())?;
        evaluate_predictions(&s, self.target_test_predictions(), self.test.labels())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl Scenario {
    /// Data knowledge each scenario assumes.
    pub fn data_knowledge(self) -> DataKnowledgeKind {
        match self {
            Scenario::S2 => DataKnowledgeKind::Marginal,
            Scenario::S3 => DataKnowledgeKind::None,
            Scenario::S1 | Scenario::S4 | Scenario::S5 => DataKnowledgeKind::Full,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKnowledgeKind {
    Full,
    Marginal,
    None,
}

/// What the adversary knows and can spend.
///
/// `explainer_uses_training_data` selects the explanation API's distance
/// weights and overrides `cf_config.use_training_data`. A `cf_config.k` of 0
/// turns the attack into label-only extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub data_knowledge: DataKnowledgeKind,
    pub arch_knowledge: ArchKnowledge,
    pub explainer_uses_training_data: bool,
    pub query_budget: usize,
    pub cf_config: CfConfig,
    pub repetitions: usize,
    pub seed: u64,
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.query_budget == 0 {
            return Err(Error::Config("query_budget must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.cf_config.k > 0 {
            self.cf_config.validate()?;
        }
        self.arch_knowledge.validate()
    }

    pub fn validate_for(&self, scenario: Scenario) -> Result<()> {
        self.validate()?;
        if self.data_knowledge != scenario.data_knowledge() {
            return Err(Error::Config(format!(
                "{scenario} assumes {:?} data knowledge, got {:?}",
                scenario.data_knowledge(),
                self.data_knowledge
            )));
        }
        if scenario == Scenario::S5 && self.cf_config.k < 2 {
            return Err(Error::Config("S5 varies the diversity weight and needs k >= 2".into()));
        }
        Ok(())
    }

    fn effective_cf_config(&self) -> CfConfig {
        CfConfig {
            use_training_data: self.explainer_uses_training_data,
            ..self.cf_config.clone()
        }
    }
}

/// The transfer set collected in one repetition, before any surrogate is
/// trained on it.
#[derive(Debug, Clone)]
pub struct RepetitionTransfer {
    pub repetition: usize,
    pub seed: u64,
    pub transfer: TransferSet,
    pub prediction_calls: usize,
    pub explanation_calls: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionOutcome {
    pub repetition: usize,
    pub seed: u64,
    #[serde(skip)]
    pub surrogate: MlpModel,
    pub chosen_spec: MlpSpec,
    pub fidelity: f64,
    pub accuracy: f64,
    pub per_class_accuracy: [f64; 2],
    pub queries_used: usize,
    pub explanation_calls: usize,
    pub transfer_rows: usize,
    pub label_counts: [usize; 2],
    pub invalid_counterfactuals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub outcomes: Vec<ExtractionOutcome>,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ScenarioReport {
    pub fn from_outcomes(outcomes: Vec<ExtractionOutcome>) -> Self {
        let fid: Vec<f64> = outcomes.iter().map(|o| o.fidelity).collect();
        let acc: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
        let (mean_fidelity, std_fidelity) = mean_std(&fid);
        let (mean_accuracy, std_accuracy) = mean_std(&acc);
        ScenarioReport {
            outcomes,
            mean_fidelity,
            std_fidelity,
            mean_accuracy,
            std_accuracy,
        }
    }
}

fn sample_queries(deployment: &Deployment, adversary: &AdversaryConfig, rep_seed: u64) -> Result<Vec<Instance>> {
    let sample_seed = seed::derive(rep_seed, stream::SAMPLE);
    let n = adversary.query_budget;
    match adversary.data_knowledge {
        DataKnowledgeKind::Full => sample_attack_set(DataKnowledge::Full(&deployment.pool), n, sample_seed),
        DataKnowledgeKind::Marginal => {
            let marginal = MarginalModel::fit(&deployment.pool)?;
            sample_attack_set(DataKnowledge::Marginal(&marginal), n, sample_seed)
        }
        DataKnowledgeKind::None => sample_attack_set(DataKnowledge::None(deployment.pool.schema()), n, sample_seed),
    }
}

/// Explanations of the first `limit` queries of a repetition, with their
/// objective traces recorded. Uses the same seeds as [`collect_transfer`].
pub fn trace_explanations(
    deployment: &Deployment,
    adversary: &AdversaryConfig,
    repetition: usize,
    limit: usize,
) -> Result<Vec<CfResult>> {
    adversary.validate()?;
    if adversary.cf_config.k == 0 {
        return Ok(Vec::new());
    }
    let rep_seed = seed::repetition_seed(adversary.seed, repetition);
    let queries = sample_queries(deployment, adversary, rep_seed)?;
    let weights = deployment.explainer_weights(adversary.explainer_uses_training_data)?;
    let config = CfConfig {
        record_trace: true,
        ..adversary.effective_cf_config()
    };
    let explain_seed = seed::derive(rep_seed, stream::EXPLAIN);
    queries
        .iter()
        .take(limit)
        .enumerate()
        .map(|(i, x)| generate(&deployment.model, x, &config, &weights, seed::derive(explain_seed, i as u64)))
        .collect()
}

/// Samples the attack set of repetition `repetition` (1-based) and queries
/// the deployment's APIs for it.
pub fn collect_transfer(deployment: &Deployment, adversary: &AdversaryConfig, repetition: usize) -> Result<RepetitionTransfer> {
    adversary.validate()?;
    let rep_seed = seed::repetition_seed(adversary.seed, repetition);
    let queries = sample_queries(deployment, adversary, rep_seed)?;
    let weights = deployment.explainer_weights(adversary.explainer_uses_training_data)?;
    let oracle = Oracle::new(&deployment.model, &weights, adversary.effective_cf_config());
    let transfer = build_transfer_set(&oracle, &queries, seed::derive(rep_seed, stream::EXPLAIN))?;
    Ok(RepetitionTransfer {
        repetition,
        seed: rep_seed,
        transfer,
        prediction_calls: oracle.prediction_calls(),
        explanation_calls: oracle.explanation_calls(),
    })
}

/// Trains the surrogate for one collected transfer set and evaluates it on
/// the deployment's test split.
pub fn fit_surrogate(deployment: &Deployment, arch: &ArchKnowledge, collected: &RepetitionTransfer) -> Result<ExtractionOutcome> {
    let (surrogate, chosen_spec) = train_surrogate(
        &collected.transfer,
        deployment.model.spec(),
        arch,
        collected.seed,
    )?;
    let eval = deployment.evaluate(&surrogate)?;
    Ok(ExtractionOutcome {
        repetition: collected.repetition,
        seed: collected.seed,
        surrogate,
        chosen_spec,
        fidelity: eval.fidelity,
        accuracy: eval.accuracy,
        per_class_accuracy: eval.per_class_accuracy,
        queries_used: collected.prediction_calls,
        explanation_calls: collected.explanation_calls,
        transfer_rows: collected.transfer.len(),
        label_counts: collected.transfer.class_counts(),
        invalid_counterfactuals: collected.transfer.invalid_counterfactuals,
    })
}

/// Runs every repetition of `scenario`; repetitions run in parallel on the
/// current rayon pool and are reported in repetition order.
pub fn run_scenario(scenario: Scenario, deployment: &Deployment, adversary: &AdversaryConfig) -> Result<ScenarioReport> {
    adversary.validate_for(scenario)?;
    let outcomes = (1..=adversary.repetitions)
        .into_par_iter()
        .map(|r| {
            let collected = collect_transfer(deployment, adversary, r)?;
            fit_surrogate(deployment, &adversary.arch_knowledge, &collected)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioReport::from_outcomes(outcomes))
}

/// The adversary configuration of traditional extraction: the whole pool
/// labeled by the prediction API, no explanations.
pub fn baseline_config(pool_size: usize, arch_knowledge: ArchKnowledge, repetitions: usize, seed: u64) -> AdversaryConfig {
    AdversaryConfig {
        data_knowledge: DataKnowledgeKind::Full,
        arch_knowledge,
        explainer_uses_training_data: false,
        query_budget: pool_size,
        cf_config: CfConfig { k: 0, ..CfConfig::default() },
        repetitions,
        seed,
    }
}

/// Traditional extraction on the full attack pool.
pub fn run_baseline(deployment: &Deployment, arch_knowledge: ArchKnowledge, repetitions: usize, seed: u64) -> Result<ScenarioReport> {
    let adversary = baseline_config(deployment.pool.len(), arch_knowledge, repetitions, seed);
    run_scenario(Scenario::S1, deployment, &adversary)
}
