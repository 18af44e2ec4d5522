//! Entropy toolbox. All logarithms are base two and `0 log 0 := 0`.

use super::density::DensityMatrix;
use crate::error::{QkdError, Result};

const NORM_TOL: f64 = 1e-9;
const NEG_TOL: f64 = 1e-9;

fn plog2p(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy of a probability distribution, in `[0, log2 n]`.
pub fn shannon_entropy(dist: &[f64]) -> Result<f64> {
    if dist.is_empty() {
        return Err(QkdError::InvalidArgument("empty distribution".into()));
    }
    let mut sum = 0.0;
    for &p in dist {
        if !p.is_finite() || p < -NEG_TOL {
            return Err(QkdError::InvalidArgument(format!("negative entry {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(QkdError::InvalidArgument(format!(
            "distribution sums to {sum}"
        )));
    }
    Ok(-dist.iter().map(|&p| plog2p(p.max(0.0))).sum::<f64>())
}

/// Binary Shannon entropy `h(p)` with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-NEG_TOL..=1.0 + NEG_TOL).contains(&p) {
        return Err(QkdError::InvalidArgument(format!("p = {p} not in [0, 1]")));
    }
    let p = p.clamp(0.0, 1.0);
    Ok(-plog2p(p) - plog2p(1.0 - p))
}

/// Von Neumann entropy `-sum lambda_i log2 lambda_i` over the eigenvalues,
/// clamping eigenvalues in `[-1e-9, 0)` to zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    -rho.eigenvalues()
        .iter()
        .map(|&l| plog2p(l.max(0.0)))
        .sum::<f64>()
}
