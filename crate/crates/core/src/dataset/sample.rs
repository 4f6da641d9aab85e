use rand::seq::index;
use rand::Rng;

use super::instance::Instance;
use super::marginal::MarginalModel;
use super::schema::{FeatureSchema, Segment};
use super::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// What the adversary knows about the target's training distribution.
#[derive(Debug, Clone, Copy)]
pub enum DataKnowledge<'a> {
    /// Samples come from the attack pool, drawn from the same distribution
    /// as the training data.
    Full(&'a Dataset),
    /// Only per-feature marginals are known.
    Marginal(&'a MarginalModel),
    /// Nothing beyond the schema: uniform over the encoded input space.
    None(&'a FeatureSchema),
}

/// Draws `n` attack-set instances. Deterministic in `seed`.
///
/// `Full` draws without replacement from the pool, `Marginal` samples each
/// feature independently, `None` draws continuous coordinates uniformly in
/// [0,1] and categorical levels uniformly.
pub fn sample_attack_set(knowledge: DataKnowledge<'_>, n: usize, seed: u64) -> Result<Vec<Instance>> {
    let mut rng = seed::rng(seed);
    match knowledge {
        DataKnowledge::Full(pool) => {
            if n > pool.len() {
                return Err(Error::PoolTooSmall {
                    requested: n,
                    available: pool.len(),
                });
            }
            Ok(index::sample(&mut rng, pool.len(), n)
                .into_iter()
                .map(|i| pool.instances()[i].clone())
                .collect())
        }
        DataKnowledge::Marginal(model) => Ok((0..n).map(|_| model.sample(&mut rng)).collect()),
        DataKnowledge::None(schema) => Ok((0..n).map(|_| uniform(schema, &mut rng)).collect()),
    }
}

fn uniform<R: Rng + ?Sized>(schema: &FeatureSchema, rng: &mut R) -> Instance {
    let mut encoded = vec![0.0; schema.encoded_dim()];
    for seg in schema.segments() {
        match *seg {
            Segment::Continuous { offset, .. } => encoded[offset] = rng.random::<f64>(),
            Segment::Categorical { offset, width, .. } => encoded[offset + rng.random_range(0..width)] = 1.0,
        }
    }
    Instance::from_encoded(schema, encoded).expect("dimension matches schema")
}
