//! The statistical manifold of diagonal k-variate exponential power
//! distributions.
//!
//! A point is a mean vector and a vector of per-dimension scales. Densities
//! use the covariance-like matrix `diag(sigma_i^2)`, so shape 2 is the usual
//! Gaussian with standard deviations `sigma_i`.

mod density;
pub(crate) mod fisher;
mod hyperbolic;
pub(crate) mod kl;

pub use density::log_density;
pub use fisher::{fisher_distance, fisher_metric, natural_gradient_correct, MetricTensor};
pub use hyperbolic::{
    minkowski_product, to_hyperbolic_models, write_hyperbolic_csv, HyperbolicImage,
    HyperboloidPoint,
};
pub use kl::{kl_gaussian_closed, kl_gaussian_closed_grad, kl_importance_sampling, KlNoise};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shape of the importance-sampling proposal.
pub const LAMBDA_STAR: u32 = 2;
pub const DEFAULT_SIGMA_MIN: f64 = 1e-3;
pub const DEFAULT_SIGMA_MAX: f64 = 1e3;
pub const DEFAULT_TRAIN_MC_SAMPLES: usize = 1024;
pub const DEFAULT_VALIDATION_MC_SAMPLES: usize = 200_000;

/// Shape, dimension and Monte Carlo settings, with the metric constants
/// derived from the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct ManifoldConfig {
    lambda: u32,
    k: usize,
    mc_samples: usize,
    sigma_min: f64,
    sigma_max: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    lambda: u32,
    k: usize,
    mc_samples: usize,
    sigma_min: f64,
    sigma_max: f64,
}

impl TryFrom<RawConfig> for ManifoldConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        ManifoldConfig::new(raw.lambda, raw.k)?
            .with_mc_samples(raw.mc_samples)?
            .with_sigma_bounds(raw.sigma_min, raw.sigma_max)
    }
}

impl From<ManifoldConfig> for RawConfig {
    fn from(c: ManifoldConfig) -> Self {
        RawConfig {
            lambda: c.lambda,
            k: c.k,
            mc_samples: c.mc_samples,
            sigma_min: c.sigma_min,
            sigma_max: c.sigma_max,
        }
    }
}

impl ManifoldConfig {
    /// `lambda` must be even and at least [`LAMBDA_STAR`]; `k` at least 1.
    pub fn new(lambda: u32, k: usize) -> Result<Self> {
        if lambda < LAMBDA_STAR || !lambda.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "shape lambda must be an even integer >= {LAMBDA_STAR}, got {lambda}"
            )));
        }
        if k == 0 {
            return Err(Error::invalid("dimension k must be at least 1"));
        }
        let l = lambda as f64;
        let lg_inv = ln_gamma(1.0 / l);
        let lg_one_minus = ln_gamma(1.0 - 1.0 / l);
        let c1 = (lg_one_minus - lg_inv).exp() * l * (l - 1.0);
        let c2 = l;
        let c3 = ((lg_inv - lg_one_minus).exp() / (l - 1.0)).sqrt();
        Ok(Self {
            lambda,
            k,
            mc_samples: DEFAULT_TRAIN_MC_SAMPLES,
            sigma_min: DEFAULT_SIGMA_MIN,
            sigma_max: DEFAULT_SIGMA_MAX,
            c1,
            c2,
            c3,
        })
    }

    pub fn with_mc_samples(mut self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid(
                "Monte Carlo sample count must be at least 1",
            ));
        }
        self.mc_samples = m;
        Ok(self)
    }

    pub fn with_sigma_bounds(mut self, min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && min < max && max.is_finite()) {
            return Err(Error::invalid(format!(
                "invalid sigma bounds [{min}, {max}]"
            )));
        }
        self.sigma_min = min;
        self.sigma_max = max;
        Ok(self)
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mc_samples(&self) -> usize {
        self.mc_samples
    }

    pub fn sigma_bounds(&self) -> (f64, f64) {
        (self.sigma_min, self.sigma_max)
    }

    /// Metric weight of the scale coordinates.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Metric weight of the mean coordinates (equals lambda).
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Mean rescaling inside the geodesic distance.
    pub fn c3(&self) -> f64 {
        self.c3
    }

    /// Sectional curvature of the univariate family.
    pub fn curvature(&self) -> f64 {
        -1.0 / self.lambda as f64
    }

    pub fn is_gaussian(&self) -> bool {
        self.lambda == 2
    }
}

/// Node representation: means and per-dimension scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPoint {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl EmbeddingPoint {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu.len(),
                found: self.sigma.len(),
            });
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid(format!(
                "scale {s} must be finite and positive"
            )));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("mean coordinate".into()));
        }
        Ok(())
    }

    pub fn clamp_sigma(&mut self, cfg: &ManifoldConfig) {
        let (lo, hi) = cfg.sigma_bounds();
        for s in &mut self.sigma {
            *s = s.clamp(lo, hi);
        }
    }
}

pub(crate) fn check_same_dim(u: &EmbeddingPoint, v: &EmbeddingPoint) -> Result<()> {
    if u.k() != v.k() {
        return Err(Error::DimensionMismatch {
            expected: u.k(),
            found: v.k(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_gaussian() {
        let cfg = ManifoldConfig::new(2, 1).unwrap();
        assert!((cfg.c1() - 2.0).abs() < 1e-12);
        assert_eq!(cfg.c2(), 2.0);
        assert!((cfg.c3() - 1.0).abs() < 1e-12);
        assert_eq!(cfg.curvature(), -0.5);
    }

    #[test]
    fn constants_for_lambda_four() {
        let cfg = ManifoldConfig::new(4, 1).unwrap();
        // 12 * Gamma(0.75) / Gamma(0.25), Gamma values from tables
        let expected = 12.0 * 1.225_416_702_465_178 / 3.625_609_908_221_908;
        assert!((cfg.c1() - expected).abs() < 1e-10);
        assert!((cfg.c1() - 4.0561).abs() < 1e-3);
        assert_eq!(cfg.c2(), 4.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ManifoldConfig::new(3, 2).is_err());
        assert!(ManifoldConfig::new(0, 2).is_err());
        assert!(ManifoldConfig::new(2, 0).is_err());
        assert!(ManifoldConfig::new(2, 2)
            .unwrap()
            .with_mc_samples(0)
            .is_err());
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = ManifoldConfig::new(4, 3)
            .unwrap()
            .with_mc_samples(77)
            .unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ManifoldConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn point_validation() {
        assert!(EmbeddingPoint::new(vec![0.0], vec![0.0]).is_err());
        assert!(EmbeddingPoint::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(EmbeddingPoint::new(vec![0.0], vec![1.0]).is_ok());
    }
}
