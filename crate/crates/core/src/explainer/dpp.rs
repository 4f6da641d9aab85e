use nalgebra::DMatrix;

use super::distance::{sign, DistanceWeights};
use crate::dataset::Instance;
use crate::error::{Error, Result};

/// Diagonal jitter added to the kernel before differentiating its
/// determinant.
pub const DPP_JITTER: f64 = 1e-4;

/// Similarity kernel `K_ij = 1 / (1 + distance(c_i, c_j))`.
pub fn kernel(cfs: &[Instance], weights: &DistanceWeights) -> Result<DMatrix<f64>> {
    for c in cfs {
        if c.dim() != weights.per_coordinate().len() {
            return Err(Error::DimensionMismatch {
                expected: weights.per_coordinate().len(),
                got: c.dim(),
            });
        }
    }
    let rows: Vec<&[f64]> = cfs.iter().map(|c| c.encoded.as_slice()).collect();
    Ok(kernel_encoded(&rows, weights))
}

pub(crate) fn kernel_encoded(cfs: &[&[f64]], weights: &DistanceWeights) -> DMatrix<f64> {
    let k = cfs.len();
    let mut m = DMatrix::identity(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let v = 1.0 / (1.0 + weights.distance_encoded(cfs[i], cfs[j]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Determinant of the similarity kernel: 1 for a single item, 0 when two
/// items coincide, larger for more mutually distant sets.
pub fn dpp_diversity(cfs: &[Instance], weights: &DistanceWeights) -> Result<f64> {
    if cfs.is_empty() {
        return Err(Error::Precondition("dpp_diversity needs at least one item".into()));
    }
    Ok(kernel(cfs, weights)?.determinant())
}

/// `det(K + jitter * I)` and its gradient with respect to every item,
/// using `d det(A) / dA = det(A) * A^-1` for symmetric `A`.
pub(crate) fn jittered_det_and_gradient(cfs: &[&[f64]], weights: &DistanceWeights) -> (f64, Vec<Vec<f64>>) {
    let k = cfs.len();
    let dim = weights.per_coordinate().len();
    let mut a = kernel_encoded(cfs, weights);
    for i in 0..k {
        a[(i, i)] += DPP_JITTER;
    }
    let det = a.determinant();
    let mut grads = vec![vec![0.0; dim]; k];
    let Some(inv) = a.clone().try_inverse() else {
        return (det, grads);
    };
    let coef = weights.per_coordinate();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            // K_ij and K_ji both depend on d_ij
            let d = weights.distance_encoded(cfs[i], cfs[j]);
            let scale = 2.0 * det * inv[(i, j)] * (-1.0 / ((1.0 + d) * (1.0 + d)));
            let g = &mut grads[i];
            for t in 0..dim {
                g[t] += scale * coef[t] * sign(cfs[i][t] - cfs[j][t]);
            }
        }
    }
    (det, grads)
}
