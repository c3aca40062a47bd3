use super::{check_same_dim, EmbeddingPoint, ManifoldConfig};
use crate::error::{Error, Result};

/// Diagonal Fisher information metric, scale block first, then means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    pub diag: Vec<f64>,
}

impl MetricTensor {
    pub fn is_positive_definite(&self) -> bool {
        self.diag.iter().all(|&g| g > 0.0)
    }
}

pub fn fisher_metric(p: &EmbeddingPoint, cfg: &ManifoldConfig) -> MetricTensor {
    let scale = p.sigma.iter().map(|s| cfg.c1() / (s * s));
    let mean = p.sigma.iter().map(|s| cfg.c2() / (s * s));
    MetricTensor {
        diag: scale.chain(mean).collect(),
    }
}

/// Geodesic distance: a product of scaled hyperbolic half-planes, one per
/// dimension, with means divided by `c3`.
pub fn fisher_distance(
    u: &EmbeddingPoint,
    v: &EmbeddingPoint,
    cfg: &ManifoldConfig,
) -> Result<f64> {
    check_same_dim(u, v)?;
    let c3 = cfg.c3();
    let sum_sq: f64 = (0..u.k())
        .map(|i| {
            let dm = (u.mu[i] - v.mu[i]) / c3;
            let ds = u.sigma[i] - v.sigma[i];
            let arg = 1.0 + (dm * dm + ds * ds) / (2.0 * u.sigma[i] * v.sigma[i]);
            arg.acosh().powi(2)
        })
        .sum();
    Ok((cfg.lambda() as f64 * sum_sq).sqrt())
}

/// Multiplies a Euclidean gradient by the inverse metric: `sigma^2 / c1`
/// on scale entries and `sigma^2 / c2` on mean entries.
pub fn natural_gradient_correct(
    p: &EmbeddingPoint,
    grad: &[f64],
    cfg: &ManifoldConfig,
) -> Result<Vec<f64>> {
    let mut out = grad.to_vec();
    natural_gradient_correct_in_place(p, &mut out, cfg)?;
    Ok(out)
}

pub(crate) fn natural_gradient_correct_in_place(
    p: &EmbeddingPoint,
    grad: &mut [f64],
    cfg: &ManifoldConfig,
) -> Result<()> {
    let k = p.k();
    if grad.len() != 2 * k {
        return Err(Error::DimensionMismatch {
            expected: 2 * k,
            found: grad.len(),
        });
    }
    for i in 0..k {
        let s2 = p.sigma[i] * p.sigma[i];
        grad[i] *= s2 / cfg.c1();
        grad[k + i] *= s2 / cfg.c2();
    }
    Ok(())
}
