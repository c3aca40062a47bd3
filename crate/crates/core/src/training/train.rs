use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{gradients, loss, Gradient};
use super::model::{Divergence, EmbeddingModel};
use crate::error::{Error, Result};
use crate::eval::pearson;
use crate::manifold::fisher::natural_gradient_correct_in_place;
use crate::manifold::{DEFAULT_SIGMA_MAX, DEFAULT_SIGMA_MIN};
use crate::sampling::{TrainingPair, TrainingSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Exponent of the distance targets `d^-beta`.
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Batches per epoch; pairs are split into this many near-equal parts.
    pub batches: usize,
    pub shuffle: bool,
    pub use_natural_gradient: bool,
    pub seed: u64,
    /// Epochs between checkpoint evaluations.
    pub eval_every: usize,
    pub sigma_bounds: (f64, f64),
    /// Sequential gradient reduction. Results are bit-identical either way;
    /// this only disables the worker pool.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            lr: 0.1,
            epochs: 1000,
            batches: 1,
            shuffle: false,
            use_natural_gradient: true,
            seed: 0,
            eval_every: 10,
            sigma_bounds: (DEFAULT_SIGMA_MIN, DEFAULT_SIGMA_MAX),
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.batches == 0 {
            return Err(Error::invalid("batch count must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("eval_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Summed batch losses of each epoch, measured before each update.
    pub loss_history: Vec<f64>,
    /// (epoch, Pearson correlation) at every checkpoint evaluation.
    pub pearson_history: Vec<(usize, f64)>,
    pub best_epoch: usize,
    pub best_pearson: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_model: EmbeddingModel,
    pub best_model: EmbeddingModel,
}

/// Pearson correlation between model similarity and inverse hop distance
/// (unreachable pairs count as 0). `None` when either side is constant.
pub fn checkpoint_pearson(
    model: &EmbeddingModel,
    div: &Divergence,
    pairs: &[TrainingPair],
) -> Option<f64> {
    let targets: Vec<f64> = pairs
        .iter()
        .map(|p| p.distance.inverse_power(1.0))
        .collect();
    let sims: Vec<f64> = pairs
        .iter()
        .map(|p| model.similarity(div, p.u.0, p.v.0))
        .collect();
    pearson(&sims, &targets).ok()
}

fn step_seed(seed: u64, step: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn batch_divergence(model: &EmbeddingModel, seed: u64, step: u64) -> Divergence {
    model.divergence(step_seed(seed, step))
}

/// Rescales each node's slice of `grad` by the inverse Fisher metric; the
/// `tau` entry is left alone.
pub fn apply_natural_gradient(model: &EmbeddingModel, grad: &mut Gradient) -> Result<()> {
    let width = 2 * model.k();
    for (p, g) in model.points.iter().zip(grad.params.chunks_exact_mut(width)) {
        natural_gradient_correct_in_place(p, g, &model.cfg)?;
    }
    Ok(())
}

/// One plain gradient-descent step on the loss over `pairs`, optionally
/// with the natural-gradient correction.
pub fn gradient_descent_step(
    model: &EmbeddingModel,
    div: &Divergence,
    pairs: &[TrainingPair],
    beta: f64,
    lr: f64,
    natural: bool,
) -> Result<EmbeddingModel> {
    let mut grad = gradients(model, div, pairs, beta, true)?;
    if natural {
        apply_natural_gradient(model, &mut grad)?;
    }
    let mut params = model.params();
    for (p, g) in params.iter_mut().zip(&grad.params) {
        *p -= lr * g;
    }
    let mut next = model.clone();
    next.set_params(&params);
    next.enforce_constraints();
    Ok(next)
}

/// Adam training over the pairs of `set`, with periodic checkpointing on
/// the Pearson correlation between similarities and inverse distances.
pub fn train(set: &TrainingSet, model: EmbeddingModel, tcfg: &TrainConfig) -> Result<TrainReport> {
    tcfg.validate()?;
    let mut model = model;
    model.cfg = model
        .cfg
        .clone()
        .with_sigma_bounds(tcfg.sigma_bounds.0, tcfg.sigma_bounds.1)?;
    model.enforce_constraints();

    let mut pairs = set.pairs();
    if pairs.is_empty() {
        return Err(Error::invalid("training set has no pairs"));
    }
    if let Some(p) = pairs.iter().find(|p| p.u.0.max(p.v.0) >= model.n_nodes()) {
        return Err(Error::invalid(format!(
            "pair ({}, {}) references a node outside the model",
            p.u, p.v
        )));
    }
    let eval_pairs = pairs.clone();
    let eval_div = model.divergence(step_seed(tcfg.seed, u64::MAX));
    let parallel = !tcfg.deterministic;

    let initial_loss = loss(&model, &eval_div, &pairs, tcfg.beta).value;
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut adam = Adam::new(tcfg.lr, model.degrees_of_freedom());
    let mut params = model.params();
    let batch_len = pairs.len().div_ceil(tcfg.batches);

    let mut loss_history = Vec::with_capacity(tcfg.epochs);
    let mut pearson_history = Vec::new();
    let mut best_model = model.clone();
    let mut best_pearson = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut step = 0u64;

    for epoch in 1..=tcfg.epochs {
        if tcfg.shuffle {
            pairs.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for batch in pairs.chunks(batch_len) {
            let div = batch_divergence(&model, tcfg.seed, step);
            step += 1;
            let mut grad = gradients(&model, &div, batch, tcfg.beta, parallel)?;
            epoch_loss += grad.loss;
            if tcfg.use_natural_gradient {
                apply_natural_gradient(&model, &mut grad)?;
            }
            adam.step(&mut params, &grad.params);
            model.set_params(&params);
            model.enforce_constraints();
            params = model.params();
        }
        loss_history.push(epoch_loss);

        if epoch % tcfg.eval_every == 0 || epoch == tcfg.epochs {
            if let Some(r) = checkpoint_pearson(&model, &eval_div, &eval_pairs) {
                pearson_history.push((epoch, r));
                if r > best_pearson {
                    best_pearson = r;
                    best_epoch = epoch;
                    best_model = model.clone();
                }
            }
        }
    }

    let final_loss = loss(&model, &eval_div, &eval_pairs, tcfg.beta).value;
    if !final_loss.is_finite() {
        return Err(Error::NonFinite("final training loss".into()));
    }
    Ok(TrainReport {
        loss_history,
        pearson_history,
        best_epoch,
        best_pearson,
        initial_loss,
        final_loss,
        final_model: model,
        best_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_erdos_renyi, generate_toy_graph, Distance};
    use crate::manifold::ManifoldConfig;
    use crate::sampling::{build_training_set, Mode};
    use crate::training::init_model;

    fn quick_config(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 60,
            lr: 0.05,
            seed,
            eval_every: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_decreases_on_every_seed() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Full, 0, 0, usize::MAX).unwrap();
        for seed in 0..5 {
            let cfg = ManifoldConfig::new(2, 2).unwrap();
            let model = init_model(25, &cfg, seed);
            let report = train(&set, model, &quick_config(seed)).unwrap();
            assert!(report.final_loss < report.initial_loss, "seed {seed}");
            let max = report
                .pearson_history
                .iter()
                .map(|x| x.1)
                .fold(f64::MIN, f64::max);
            assert_eq!(report.best_pearson, max);
        }
    }

    #[test]
    fn constraints_hold_after_training() {
        let g = generate_erdos_renyi(20, 0.1, 1).unwrap();
        let set = build_training_set(&g, Mode::Sampled, 5, 1, usize::MAX).unwrap();
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let tcfg = TrainConfig {
            lr: 0.5,
            sigma_bounds: (4.5, 6.0),
            batches: 3,
            shuffle: true,
            ..quick_config(1)
        };
        let report = train(&set, init_model(20, &cfg, 1), &tcfg).unwrap();
        for m in [&report.final_model, &report.best_model] {
            assert!(m.tau >= super::super::model::TAU_MIN);
            for p in &m.points {
                assert!(p.sigma.iter().all(|s| (4.5..=6.0).contains(s)));
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Full, 0, 0, usize::MAX).unwrap();
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let tcfg = TrainConfig {
            shuffle: true,
            batches: 4,
            deterministic: true,
            ..quick_config(9)
        };
        let a = train(&set, init_model(25, &cfg, 9), &tcfg).unwrap();
        let b = train(&set, init_model(25, &cfg, 9), &tcfg).unwrap();
        assert_eq!(a, b);
        let parallel = TrainConfig {
            deterministic: false,
            ..tcfg
        };
        let c = train(&set, init_model(25, &cfg, 9), &parallel).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn higher_shape_trains() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Full, 0, 0, usize::MAX).unwrap();
        let cfg = ManifoldConfig::new(4, 2)
            .unwrap()
            .with_mc_samples(64)
            .unwrap();
        let tcfg = TrainConfig {
            epochs: 20,
            ..quick_config(2)
        };
        let report = train(&set, init_model(25, &cfg, 2), &tcfg).unwrap();
        assert!(report.final_loss < report.initial_loss);
    }

    #[test]
    fn rejects_invalid_configs() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Full, 0, 0, usize::MAX).unwrap();
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        for bad in [
            TrainConfig {
                beta: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                lr: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                batches: 0,
                ..TrainConfig::default()
            },
        ] {
            assert!(train(&set, init_model(25, &cfg, 0), &bad).is_err());
        }
        let small = init_model(3, &cfg, 0);
        assert!(train(&set, small, &TrainConfig::default()).is_err());
    }

    #[test]
    fn natural_step_beats_plain_step_at_small_rate() {
        let g = generate_erdos_renyi(50, 0.15, 0).unwrap();
        let d = crate::graph::all_pairs_shortest_paths(&g).unwrap();
        let pairs = crate::sampling::full_pairs(&d);
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let model = init_model(50, &cfg, 0);
        let div = Divergence::Closed;
        let before = loss(&model, &div, &pairs, 0.5).value;
        let plain = gradient_descent_step(&model, &div, &pairs, 0.5, 1e-6, false).unwrap();
        let natural = gradient_descent_step(&model, &div, &pairs, 0.5, 1e-6, true).unwrap();
        let dp = before - loss(&plain, &div, &pairs, 0.5).value;
        let dn = before - loss(&natural, &div, &pairs, 0.5).value;
        assert!(dp > 0.0 && dn > dp);
        assert!(pairs.iter().any(|p| p.distance == Distance::Infinite) || g.n_edges() > 0);
    }
}
