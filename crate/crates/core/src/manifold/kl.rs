use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::density::{log_normalizer, radial_term};
use super::{check_same_dim, EmbeddingPoint, ManifoldConfig};
use crate::error::Result;

/// Closed-form KL(u ‖ v) between diagonal Gaussians with standard
/// deviations `sigma`.
pub fn kl_gaussian_closed(u: &EmbeddingPoint, v: &EmbeddingPoint) -> Result<f64> {
    check_same_dim(u, v)?;
    Ok(kl_gaussian_unchecked(u, v))
}

pub(crate) fn kl_gaussian_unchecked(u: &EmbeddingPoint, v: &EmbeddingPoint) -> f64 {
    let mut total = 0.0;
    for i in 0..u.k() {
        let ratio = u.sigma[i] / v.sigma[i];
        let dm = (u.mu[i] - v.mu[i]) / v.sigma[i];
        total += ratio * ratio + dm * dm - 1.0 - 2.0 * ratio.ln();
    }
    0.5 * total
}

/// Closed-form KL and its gradient. `du` and `dv` receive the partial
/// derivatives for `u` and `v` in `[sigma_1..sigma_k, mu_1..mu_k]` order.
pub fn kl_gaussian_closed_grad(
    u: &EmbeddingPoint,
    v: &EmbeddingPoint,
    du: &mut [f64],
    dv: &mut [f64],
) -> f64 {
    let k = u.k();
    let mut total = 0.0;
    for i in 0..k {
        let (su, sv) = (u.sigma[i], v.sigma[i]);
        let diff = u.mu[i] - v.mu[i];
        let sv2 = sv * sv;
        let ratio = su / sv;
        total += ratio * ratio + diff * diff / sv2 - 1.0 - 2.0 * ratio.ln();

        du[i] = su / sv2 - 1.0 / su;
        du[k + i] = diff / sv2;
        dv[i] = 1.0 / sv - (su * su + diff * diff) / (sv2 * sv);
        dv[k + i] = -diff / sv2;
    }
    0.5 * total
}

/// A frozen batch of standard-normal draws with their importance weights.
///
/// A proposal draw for node `u` is `mu_u + sigma_u * eps`. Since the target
/// and the proposal share `u`'s location and scale, the weight
/// `p_lambda(x) / p_2(x)` depends on `eps` alone and is precomputed here.
#[derive(Debug, Clone)]
pub struct KlNoise {
    k: usize,
    lambda: u32,
    eps: Vec<f64>,
    weight: Vec<f64>,
    self_term: Vec<f64>,
}

impl KlNoise {
    pub fn new(cfg: &ManifoldConfig, seed: u64) -> Self {
        Self::with_samples(cfg, cfg.mc_samples(), seed)
    }

    pub fn with_samples(cfg: &ManifoldConfig, m: usize, seed: u64) -> Self {
        let k = cfg.k();
        let lambda = cfg.lambda();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps: Vec<f64> = (0..m * k).map(|_| rng.sample(StandardNormal)).collect();
        let log_target_norm = log_normalizer(lambda as f64, k);
        let log_proposal_norm = -0.5 * k as f64 * (2.0 * PI).ln();
        let mut weight = Vec::with_capacity(m);
        let mut self_term = Vec::with_capacity(m);
        for e in eps.chunks_exact(k) {
            let q: f64 = e.iter().map(|x| x * x).sum();
            let r = radial_term(q, lambda);
            weight.push((log_target_norm - r - (log_proposal_norm - 0.5 * q)).exp());
            self_term.push(r);
        }
        Self {
            k,
            lambda,
            eps,
            weight,
            self_term,
        }
    }

    pub fn samples(&self) -> usize {
        self.weight.len()
    }

    /// Importance-sampled KL(u ‖ v).
    pub fn kl(&self, u: &EmbeddingPoint, v: &EmbeddingPoint) -> f64 {
        let log_scale_diff: f64 = (0..self.k).map(|i| (v.sigma[i] / u.sigma[i]).ln()).sum();
        let mut acc = 0.0;
        for (s, e) in self.eps.chunks_exact(self.k).enumerate() {
            let q: f64 = e
                .iter()
                .enumerate()
                .map(|(i, &ei)| {
                    let z = (u.mu[i] + u.sigma[i] * ei - v.mu[i]) / v.sigma[i];
                    z * z
                })
                .sum();
            let log_ratio = log_scale_diff - self.self_term[s] + radial_term(q, self.lambda);
            acc += self.weight[s] * log_ratio;
        }
        acc / self.samples() as f64
    }

    /// Estimate and exact gradient of the estimate for this fixed noise,
    /// in the same layout as [`kl_gaussian_closed_grad`].
    pub fn kl_grad(
        &self,
        u: &EmbeddingPoint,
        v: &EmbeddingPoint,
        du: &mut [f64],
        dv: &mut [f64],
    ) -> f64 {
        let k = self.k;
        du[..2 * k].fill(0.0);
        dv[..2 * k].fill(0.0);
        let log_scale_diff: f64 = (0..k).map(|i| (v.sigma[i] / u.sigma[i]).ln()).sum();
        let half_power = self.lambda as i32 / 2;
        let slope_scale = self.lambda as f64 / 4.0;
        let mut z = vec![0.0; k];
        let mut acc = 0.0;
        let mut weight_sum = 0.0;

        for (s, e) in self.eps.chunks_exact(k).enumerate() {
            let mut q = 0.0;
            for i in 0..k {
                z[i] = (u.mu[i] + u.sigma[i] * e[i] - v.mu[i]) / v.sigma[i];
                q += z[i] * z[i];
            }
            let w = self.weight[s];
            acc += w * (log_scale_diff - self.self_term[s] + radial_term(q, self.lambda));
            weight_sum += w;
            // d radial / dq
            let slope = w * slope_scale * q.powi(half_power - 1);
            for i in 0..k {
                let dq_dmu = 2.0 * z[i] / v.sigma[i];
                du[i] += slope * dq_dmu * e[i];
                du[k + i] += slope * dq_dmu;
                dv[i] -= slope * dq_dmu * z[i];
                dv[k + i] -= slope * dq_dmu;
            }
        }
        let m = self.samples() as f64;
        let mean_w = weight_sum / m;
        for i in 0..k {
            du[i] = du[i] / m - mean_w / u.sigma[i];
            du[k + i] /= m;
            dv[i] = dv[i] / m + mean_w / v.sigma[i];
            dv[k + i] /= m;
        }
        acc / m
    }
}

/// Importance-sampling estimate of KL(u ‖ v) with `cfg.mc_samples()` draws
/// from the shape-2 proposal centred on `u`.
pub fn kl_importance_sampling(
    u: &EmbeddingPoint,
    v: &EmbeddingPoint,
    cfg: &ManifoldConfig,
    seed: u64,
) -> Result<f64> {
    check_same_dim(u, v)?;
    if u.k() != cfg.k() {
        return Err(crate::Error::DimensionMismatch {
            expected: cfg.k(),
            found: u.k(),
        });
    }
    Ok(KlNoise::new(cfg, seed).kl(u, v))
}
