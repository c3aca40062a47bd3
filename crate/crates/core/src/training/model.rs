use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{kl_gaussian_closed_grad, EmbeddingPoint, KlNoise, ManifoldConfig};

pub const TAU_MIN: f64 = 1e-6;
pub const INIT_TAU: f64 = 2.5;
pub const INIT_MU_RANGE: (f64, f64) = (0.0, 10.0);
pub const INIT_SIGMA_RANGE: (f64, f64) = (4.0, 7.0);

/// Node distributions plus the trainable similarity scale `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub points: Vec<EmbeddingPoint>,
    pub tau: f64,
    pub cfg: ManifoldConfig,
}

impl EmbeddingModel {
    pub fn new(points: Vec<EmbeddingPoint>, tau: f64, cfg: ManifoldConfig) -> Result<Self> {
        for p in &points {
            p.validate()?;
            if p.k() != cfg.k() {
                return Err(Error::DimensionMismatch {
                    expected: cfg.k(),
                    found: p.k(),
                });
            }
        }
        if !(tau.is_finite() && tau >= TAU_MIN) {
            return Err(Error::invalid(format!("tau {tau} below {TAU_MIN}")));
        }
        Ok(Self { points, tau, cfg })
    }

    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn k(&self) -> usize {
        self.cfg.k()
    }

    /// `2k|V| + 1`: means and scales of every node plus `tau`.
    pub fn degrees_of_freedom(&self) -> usize {
        2 * self.k() * self.n_nodes() + 1
    }

    /// Flat parameter vector: per node `[sigma_1..sigma_k, mu_1..mu_k]`,
    /// then `tau`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.degrees_of_freedom());
        for p in &self.points {
            out.extend_from_slice(&p.sigma);
            out.extend_from_slice(&p.mu);
        }
        out.push(self.tau);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let k = self.k();
        debug_assert_eq!(params.len(), self.degrees_of_freedom());
        for (p, chunk) in self.points.iter_mut().zip(params.chunks_exact(2 * k)) {
            p.sigma.copy_from_slice(&chunk[..k]);
            p.mu.copy_from_slice(&chunk[k..]);
        }
        self.tau = params[params.len() - 1];
    }

    /// Clamps every scale into the configured bounds and `tau` to `TAU_MIN`.
    pub fn enforce_constraints(&mut self) {
        for p in &mut self.points {
            p.clamp_sigma(&self.cfg);
        }
        self.tau = self.tau.max(TAU_MIN);
    }

    /// KL divergences for this model: closed form for shape 2, otherwise an
    /// importance-sampling estimate with noise fixed by `seed`.
    pub fn divergence(&self, seed: u64) -> Divergence {
        if self.cfg.is_gaussian() {
            Divergence::Closed
        } else {
            Divergence::Sampled(KlNoise::new(&self.cfg, seed))
        }
    }

    /// Similarity `(1 + tau KL_uv)^-1` for every pair.
    pub fn similarity(&self, div: &Divergence, u: usize, v: usize) -> f64 {
        1.0 / (1.0 + self.tau * div.kl(&self.points[u], &self.points[v]))
    }

    pub fn write<W: Write>(&self, mut w: W, meta: &ModelMeta) -> Result<()> {
        let meta = ModelMeta {
            lambda: self.cfg.lambda(),
            k: self.k(),
            n: self.n_nodes(),
            tau: self.tau,
            mc_samples: Some(self.cfg.mc_samples()),
            ..meta.clone()
        };
        serde_json::to_writer(&mut w, &meta).map_err(|e| Error::format(e.to_string()))?;
        writeln!(w)?;
        for (i, p) in self.points.iter().enumerate() {
            write!(w, "{i}")?;
            for x in p.mu.iter().chain(&p.sigma) {
                write!(w, " {x:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<(Self, ModelMeta)> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::format("model file is empty"))??;
        let meta: ModelMeta = serde_json::from_str(&first)
            .map_err(|e| Error::format(format!("model metadata: {e}")))?;
        let mut cfg = ManifoldConfig::new(meta.lambda, meta.k)?;
        if let Some(m) = meta.mc_samples {
            cfg = cfg.with_mc_samples(m)?;
        }
        let k = meta.k;
        let mut points = Vec::with_capacity(meta.n);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                line: i + 2,
                message: msg.to_string(),
            };
            let mut tokens = line.split_whitespace();
            let id: usize = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("missing node id"))?;
            if id != points.len() {
                return Err(bad("node ids must be consecutive from 0"));
            }
            let values: Vec<f64> = tokens
                .map(|t| t.parse::<f64>().map_err(|_| bad("invalid number")))
                .collect::<Result<_>>()?;
            if values.len() != 2 * k {
                return Err(bad("expected k means followed by k scales"));
            }
            points.push(
                EmbeddingPoint::new(values[..k].to_vec(), values[k..].to_vec())
                    .map_err(|e| bad(&e.to_string()))?,
            );
        }
        if points.len() != meta.n {
            return Err(Error::DimensionMismatch {
                expected: meta.n,
                found: points.len(),
            });
        }
        Ok((Self::new(points, meta.tau, cfg)?, meta))
    }
}

/// First line of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub lambda: u32,
    pub k: usize,
    pub n: usize,
    pub tau: f64,
    pub beta: f64,
    pub seed: u64,
    pub epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

impl ModelMeta {
    pub fn new(beta: f64, seed: u64, epoch: usize) -> Self {
        Self {
            lambda: 0,
            k: 0,
            n: 0,
            tau: 0.0,
            beta,
            seed,
            epoch,
            mc_samples: None,
        }
    }
}

/// How KL divergences between node distributions are evaluated.
#[derive(Debug, Clone)]
pub enum Divergence {
    Closed,
    Sampled(KlNoise),
}

impl Divergence {
    pub fn kl(&self, u: &EmbeddingPoint, v: &EmbeddingPoint) -> f64 {
        match self {
            Divergence::Closed => crate::manifold::kl::kl_gaussian_unchecked(u, v),
            Divergence::Sampled(noise) => noise.kl(u, v),
        }
    }

    pub fn kl_grad(
        &self,
        u: &EmbeddingPoint,
        v: &EmbeddingPoint,
        du: &mut [f64],
        dv: &mut [f64],
    ) -> f64 {
        match self {
            Divergence::Closed => kl_gaussian_closed_grad(u, v, du, dv),
            Divergence::Sampled(noise) => noise.kl_grad(u, v, du, dv),
        }
    }
}

/// Means uniform on [0, 10], scales uniform on [4, 7], `tau` = 2.5.
pub fn init_model(n_nodes: usize, cfg: &ManifoldConfig, seed: u64) -> EmbeddingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cfg.k();
    let points = (0..n_nodes)
        .map(|_| {
            let mu = (0..k)
                .map(|_| rng.random_range(INIT_MU_RANGE.0..=INIT_MU_RANGE.1))
                .collect();
            let sigma = (0..k)
                .map(|_| rng.random_range(INIT_SIGMA_RANGE.0..=INIT_SIGMA_RANGE.1))
                .collect();
            EmbeddingPoint { mu, sigma }
        })
        .collect();
    EmbeddingModel {
        points,
        tau: INIT_TAU,
        cfg: cfg.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_ranges_and_determinism() {
        let cfg = ManifoldConfig::new(2, 3).unwrap();
        let m = init_model(50, &cfg, 7);
        assert_eq!(m.tau, 2.5);
        for p in &m.points {
            assert!(p.mu.iter().all(|x| (0.0..=10.0).contains(x)));
            assert!(p.sigma.iter().all(|x| (4.0..=7.0).contains(x)));
        }
        assert_eq!(m, init_model(50, &cfg, 7));
        assert_ne!(m, init_model(50, &cfg, 8));
        assert_eq!(m.degrees_of_freedom(), 2 * 3 * 50 + 1);
    }

    #[test]
    fn params_round_trip() {
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let m = init_model(4, &cfg, 1);
        let mut other = init_model(4, &cfg, 2);
        other.set_params(&m.params());
        assert_eq!(other, m);
    }

    #[test]
    fn two_dimensions_mean_four_parameters_per_node() {
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let m = init_model(25, &cfg, 1);
        let mut buf = Vec::new();
        m.write(&mut buf, &ModelMeta::new(0.5, 1, 0)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert_eq!(row.split_whitespace().count(), 1 + 4);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(EmbeddingModel::read(&b""[..]).is_err());
        let meta = r#"{"lambda":2,"k":1,"n":2,"tau":2.5,"beta":0.5,"seed":0,"epoch":0}"#;
        let short = format!("{meta}\n0 1.0 2.0\n");
        assert!(EmbeddingModel::read(short.as_bytes()).is_err());
        let bad_sigma = format!("{meta}\n0 1.0 2.0\n1 1.0 -2.0\n");
        assert!(EmbeddingModel::read(bad_sigma.as_bytes()).is_err());
        let ok = format!("{meta}\n0 1.0 2.0\n1 1.0 2.0\n");
        assert!(EmbeddingModel::read(ok.as_bytes()).is_ok());
    }

    proptest! {
        #[test]
        fn file_round_trip_is_exact(seed in any::<u64>(), lambda in prop::sample::select(vec![2u32, 4]), tau in 1e-6f64..1e3) {
            let cfg = ManifoldConfig::new(lambda, 3).unwrap();
            let mut m = init_model(6, &cfg, seed);
            m.tau = tau;
            let mut buf = Vec::new();
            m.write(&mut buf, &ModelMeta::new(0.5, seed, 3)).unwrap();
            let (back, meta) = EmbeddingModel::read(&buf[..]).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(meta.seed, seed);
            prop_assert_eq!(meta.epoch, 3);
        }
    }
}
