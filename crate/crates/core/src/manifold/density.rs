use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use super::{EmbeddingPoint, ManifoldConfig};
use crate::error::{Error, Result};

/// Log normalizer of a unit-scale density of shape `lambda` in `k`
/// dimensions; subtract `sum(ln sigma)` for general scales.
pub(crate) fn log_normalizer(lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    lambda.ln() + ln_gamma(k / 2.0)
        - (1.0 + k / lambda) * LN_2
        - (k / 2.0) * PI.ln()
        - ln_gamma(k / lambda)
}

/// Squared Mahalanobis radius raised to `lambda / 2`, halved: the exponent
/// of the density.
#[inline]
pub(crate) fn radial_term(q: f64, lambda: u32) -> f64 {
    match lambda {
        2 => 0.5 * q,
        4 => 0.5 * q * q,
        _ => 0.5 * q.powi(lambda as i32 / 2),
    }
}

pub fn log_density(p: &EmbeddingPoint, x: &[f64], cfg: &ManifoldConfig) -> Result<f64> {
    if x.len() != p.k() {
        return Err(Error::DimensionMismatch {
            expected: p.k(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("density argument".into()));
    }
    let q: f64 = x
        .iter()
        .zip(&p.mu)
        .zip(&p.sigma)
        .map(|((x, m), s)| ((x - m) / s).powi(2))
        .sum();
    let log_det_half: f64 = p.sigma.iter().map(|s| s.ln()).sum();
    Ok(log_normalizer(cfg.lambda() as f64, p.k()) - log_det_half - radial_term(q, cfg.lambda()))
}
