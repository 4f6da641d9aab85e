use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::transfer::TransferSet;
use crate::error::{Error, Result};
use crate::metrics::agreement;
use crate::neuralnet::{train_on, MlpModel, MlpSpec};
use crate::seed::{self, stream};

/// Fraction of the transfer set held out to rank candidate architectures.
pub const HOLDOUT_FRACTION: f64 = 0.2;

/// Extra training attempts when a fit collapses to a constant predictor.
pub const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchKnowledge {
    /// The adversary trains the target's own architecture and recipe.
    Known,
    /// The adversary tries each candidate and keeps the best one.
    Unknown { candidates: Vec<MlpSpec> },
}

impl ArchKnowledge {
    pub fn validate(&self) -> Result<()> {
        if let ArchKnowledge::Unknown { candidates } = self {
            if candidates.is_empty() {
                return Err(Error::Config("unknown-architecture candidate list is empty".into()));
            }
            candidates.iter().try_for_each(MlpSpec::validate)?;
        }
        Ok(())
    }

    pub fn is_known(&self) -> bool {
        matches!(self, ArchKnowledge::Known)
    }
}

fn require_both(labels: &[u8]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 {
        return Err(Error::SingleClass(0));
    }
    if ones == labels.len() {
        return Err(Error::SingleClass(1));
    }
    Ok(())
}

/// Trains `spec`, retraining from a fresh seed while the model predicts a
/// single class on data that holds both.
pub fn fit_with_restarts(spec: &MlpSpec, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<MlpModel> {
    let mut attempt_spec = spec.clone();
    let mut attempt = 0;
    loop {
        let (model, _) = train_on(&attempt_spec, x, y)?;
        let pred = model.predict_batch(x)?;
        let constant = pred.iter().all(|&p| p == pred[0]);
        if !constant || attempt == MAX_RESTARTS {
            return Ok(model);
        }
        attempt += 1;
        log::debug!("fit collapsed to class {}, restart {attempt}", pred[0]);
        attempt_spec = spec.clone().with_seed(seed::derive(spec.seed, stream::RESTART + attempt as u64));
    }
}

/// Index of the largest score; the first one wins ties.
pub fn select_candidate(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Trains the adversary's surrogate on `transfer`.
///
/// With an unknown architecture every candidate is trained on 80% of the
/// transfer set and scored by agreement with the held-out 20%; the winner is
/// then retrained on the whole transfer set.
pub fn train_surrogate(
    transfer: &TransferSet,
    target_spec: &MlpSpec,
    knowledge: &ArchKnowledge,
    seed: u64,
) -> Result<(MlpModel, MlpSpec)> {
    require_both(&transfer.labels)?;
    knowledge.validate()?;
    let dim = transfer.instances[0].dim();
    let x = transfer.encoded_matrix(dim);
    let chosen = match knowledge {
        ArchKnowledge::Known => target_spec.clone(),
        ArchKnowledge::Unknown { candidates } if candidates.len() == 1 => candidates[0].clone(),
        ArchKnowledge::Unknown { candidates } => {
            let mut order: Vec<usize> = (0..transfer.len()).collect();
            order.shuffle(&mut seed::rng(seed::derive(seed, stream::HOLDOUT)));
            let n_holdout = ((transfer.len() as f64 * HOLDOUT_FRACTION).round() as usize).clamp(1, transfer.len() - 1);
            let (held, fit) = order.split_at(n_holdout);
            let (x_fit, y_fit) = transfer.select(fit);
            let (x_held, y_held) = transfer.select(held);
            require_both(&y_fit)?;
            let mut scores = Vec::with_capacity(candidates.len());
            for (i, spec) in candidates.iter().enumerate() {
                let spec = spec.clone().with_seed(seed::derive(seed, stream::CANDIDATE + i as u64));
                let model = fit_with_restarts(&spec, x_fit.view(), &y_fit)?;
                scores.push(agreement(&model.predict_batch(x_held.view())?, &y_held)?);
            }
            let best = select_candidate(&scores).expect("candidates are non-empty");
            log::debug!("candidate holdout agreements {scores:?}, chose {best}");
            candidates[best].clone()
        }
    };
    let spec = chosen.with_seed(seed::derive(seed, stream::SURROGATE));
    let model = fit_with_restarts(&spec, x.view(), &transfer.labels)?;
    Ok((model, spec))
}
