use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::training::{Divergence, EmbeddingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Successors ranked by `KL_uv`.
    Out,
    /// Predecessors ranked by `KL_vu`.
    In,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            other => Err(Error::invalid(format!(
                "direction must be out or in, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Out => "out",
            Direction::In => "in",
        })
    }
}

/// Fraction of edges recovered when each node predicts its `theta_u`
/// closest candidates, `theta_u` being its true out- (or in-) degree.
/// Ties in KL are broken by ascending node id. An edgeless graph gives 0.
pub fn reconstruction_precision(
    model: &EmbeddingModel,
    div: &Divergence,
    g: &DirectedGraph,
    direction: Direction,
) -> Result<f64> {
    let n = g.n_nodes();
    if model.n_nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: model.n_nodes(),
        });
    }
    if g.n_edges() == 0 {
        return Ok(0.0);
    }
    let hits: usize = (0..n)
        .into_par_iter()
        .map(|u| {
            let truth = match direction {
                Direction::Out => g.out_neighbors(u),
                Direction::In => g.in_neighbors(u),
            };
            let theta = truth.len();
            if theta == 0 {
                return 0;
            }
            let mut ranked: Vec<(f64, usize)> = (0..n)
                .filter(|&v| v != u)
                .map(|v| {
                    let kl = match direction {
                        Direction::Out => div.kl(&model.points[u], &model.points[v]),
                        Direction::In => div.kl(&model.points[v], &model.points[u]),
                    };
                    (kl, v)
                })
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked[..theta]
                .iter()
                .filter(|(_, v)| truth.binary_search(v).is_ok())
                .count()
        })
        .sum();
    Ok(hits as f64 / g.n_edges() as f64)
}
