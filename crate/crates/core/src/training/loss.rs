use rayon::prelude::*;

use super::model::{Divergence, EmbeddingModel};
use crate::error::{Error, Result};
use crate::graph::Distance;
use crate::sampling::TrainingPair;

/// Pairs per gradient chunk. Chunks are summed in index order, so the
/// result is identical whether chunks run in parallel or not.
const CHUNK: usize = 4096;

/// Target of a pair: `d^-beta`, or 0 for unreachable pairs.
#[inline]
pub fn target(distance: Distance, beta: f64) -> f64 {
    distance.inverse_power(beta)
}

/// `((1 + tau KL)^-1 - d^-beta)^2` for a given KL value.
#[inline]
pub fn term_from_kl(kl: f64, tau: f64, distance: Distance, beta: f64) -> f64 {
    let s = 1.0 / (1.0 + tau * kl);
    (s - target(distance, beta)).powi(2)
}

/// Loss term of one ordered pair.
pub fn pair_term(
    model: &EmbeddingModel,
    div: &Divergence,
    u: usize,
    v: usize,
    distance: Distance,
    beta: f64,
) -> f64 {
    debug_assert_ne!(u, v);
    let kl = div.kl(&model.points[u], &model.points[v]);
    term_from_kl(kl, model.tau, distance, beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Number of pair terms summed.
    pub terms: usize,
}

/// Sum of pair terms over `pairs`.
pub fn loss(
    model: &EmbeddingModel,
    div: &Divergence,
    pairs: &[TrainingPair],
    beta: f64,
) -> LossValue {
    let value = pairs
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|p| pair_term(model, div, p.u.0, p.v.0, p.distance, beta))
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    LossValue {
        value,
        terms: pairs.len(),
    }
}

/// Batch loss with its gradient in the model's flat parameter layout
/// (see [`EmbeddingModel::params`]); `params[last]` is the `tau` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub params: Vec<f64>,
    pub loss: f64,
}

impl Gradient {
    pub fn tau(&self) -> f64 {
        self.params[self.params.len() - 1]
    }
}

fn chunk_gradient(
    model: &EmbeddingModel,
    div: &Divergence,
    chunk: &[TrainingPair],
    beta: f64,
) -> Result<(Vec<f64>, f64)> {
    let k = model.k();
    let width = 2 * k;
    let mut grad = vec![0.0; model.degrees_of_freedom()];
    let tau_slot = grad.len() - 1;
    let mut du = vec![0.0; width];
    let mut dv = vec![0.0; width];
    let mut total = 0.0;

    for p in chunk {
        let (u, v) = (p.u.0, p.v.0);
        let kl = div.kl_grad(&model.points[u], &model.points[v], &mut du, &mut dv);
        let s = 1.0 / (1.0 + model.tau * kl);
        let resid = s - target(p.distance, beta);
        let term = resid * resid;
        if !term.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss term for pair ({u}, {v}) with distance {} (KL = {kl})",
                p.distance
            )));
        }
        total += term;
        // d term / d s = 2 resid, d s / d KL = -tau s^2, d s / d tau = -KL s^2
        let ds = 2.0 * resid * s * s;
        let dkl = -ds * model.tau;
        grad[tau_slot] -= ds * kl;
        let (ou, ov) = (u * width, v * width);
        for j in 0..width {
            grad[ou + j] += dkl * du[j];
            grad[ov + j] += dkl * dv[j];
        }
    }
    Ok((grad, total))
}

/// Gradient of the summed pair terms of `batch`.
///
/// Shape 2 differentiates the closed-form KL exactly; other shapes
/// differentiate the importance-sampling estimate held by `div`.
pub fn gradients(
    model: &EmbeddingModel,
    div: &Divergence,
    batch: &[TrainingPair],
    beta: f64,
    parallel: bool,
) -> Result<Gradient> {
    let parts: Vec<(Vec<f64>, f64)> = if parallel {
        batch
            .par_chunks(CHUNK)
            .map(|c| chunk_gradient(model, div, c, beta))
            .collect::<Result<_>>()?
    } else {
        batch
            .chunks(CHUNK)
            .map(|c| chunk_gradient(model, div, c, beta))
            .collect::<Result<_>>()?
    };
    let mut params = vec![0.0; model.degrees_of_freedom()];
    let mut loss = 0.0;
    for (g, l) in parts {
        for (acc, x) in params.iter_mut().zip(&g) {
            *acc += x;
        }
        loss += l;
    }
    Ok(Gradient { params, loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{EmbeddingPoint, ManifoldConfig};
    use crate::training::init_model;

    #[test]
    fn term_examples() {
        assert_eq!(term_from_kl(0.0, 2.5, Distance::Finite(1), 0.5), 0.0);
        let t = term_from_kl(0.5, 2.5, Distance::Finite(4), 0.5);
        let expected = (1.0f64 / 2.25 - 0.5).powi(2);
        assert!((t - expected).abs() < 1e-15);
        assert!((t - 0.003086).abs() < 1e-6);
        let inf = term_from_kl(0.5, 2.5, Distance::Infinite, 0.5);
        assert!((inf - (1.0f64 / 2.25).powi(2)).abs() < 1e-15);
        assert!(inf > 0.0);
    }

    #[test]
    fn perfectly_fit_pair_has_no_gradient() {
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let p = EmbeddingPoint::new(vec![1.0, 2.0], vec![1.0, 1.5]).unwrap();
        let model = EmbeddingModel::new(vec![p.clone(), p], 2.5, cfg).unwrap();
        let pairs = [TrainingPair::new(0, 1, Distance::Finite(1))];
        let g = gradients(&model, &Divergence::Closed, &pairs, 0.5, false).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.params.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let model = init_model(40, &cfg, 3);
        let pairs: Vec<_> = (0..40)
            .flat_map(|u| (0..40).map(move |v| (u, v)))
            .filter(|(u, v)| u != v)
            .cycle()
            .take(20_000)
            .map(|(u, v)| TrainingPair::new(u, v, Distance::Finite(1 + ((u + v) % 4) as u32)))
            .collect();
        let a = gradients(&model, &Divergence::Closed, &pairs, 0.5, true).unwrap();
        let b = gradients(&model, &Divergence::Closed, &pairs, 0.5, false).unwrap();
        assert_eq!(a, b);
        let l = loss(&model, &Divergence::Closed, &pairs, 0.5);
        assert_eq!(l.terms, 20_000);
        assert!((l.value - a.loss).abs() < 1e-9 * l.value);
    }

    #[test]
    fn non_finite_term_names_the_pair() {
        let cfg = ManifoldConfig::new(2, 1).unwrap();
        let a = EmbeddingPoint {
            mu: vec![f64::NAN],
            sigma: vec![1.0],
        };
        let b = EmbeddingPoint {
            mu: vec![0.0],
            sigma: vec![1.0],
        };
        let model = EmbeddingModel {
            points: vec![a, b],
            tau: 1.0,
            cfg,
        };
        let err = gradients(
            &model,
            &Divergence::Closed,
            &[TrainingPair::new(0, 1, Distance::Finite(1))],
            0.5,
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("(0, 1)"), "{err}");
    }
}
