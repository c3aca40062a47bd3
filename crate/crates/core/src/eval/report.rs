use std::fmt::Write as _;
use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{pearson, spearman};
use super::mi::mutual_information_knn;
use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, NodeId};
use crate::sampling::TrainingPair;
use crate::training::EmbeddingModel;

pub const DEFAULT_BOOTSTRAP: usize = 40;
pub const DEFAULT_K_NEIGHBORS: usize = 5;
/// Pair counts above this use a subsample for the MI estimate.
pub const MI_SUBSAMPLE_ABOVE: usize = 1_000_000;
pub const MI_SUBSAMPLE_SIZE: usize = 100_000;

/// Where evaluation pairs come from.
#[derive(Debug, Clone, Copy)]
pub enum PairSource<'a> {
    /// Every ordered pair `u != v` of a distance matrix.
    Matrix(&'a DistanceMatrix),
    /// An explicit pair list.
    Pairs(&'a [TrainingPair]),
}

impl PairSource<'_> {
    pub fn descriptor(&self) -> &'static str {
        match self {
            PairSource::Matrix(_) => "all-pairs",
            PairSource::Pairs(_) => "pair-list",
        }
    }

    /// Pairs sorted by `(u, v)`, so results do not depend on input order.
    fn canonical_pairs(&self) -> Vec<TrainingPair> {
        match self {
            PairSource::Matrix(d) => crate::sampling::full_pairs(d),
            PairSource::Pairs(p) => {
                let mut pairs = p.to_vec();
                pairs.sort_by_key(|p| (p.u, p.v));
                pairs
            }
        }
    }

    fn check_nodes(&self, n: usize) -> Result<()> {
        match self {
            PairSource::Matrix(d) if d.n() != n => Err(Error::DimensionMismatch {
                expected: n,
                found: d.n(),
            }),
            PairSource::Pairs(p) => match p.iter().find(|p| p.u.0.max(p.v.0) >= n) {
                Some(p) => Err(Error::invalid(format!(
                    "pair ({}, {}) references a node outside the {n}-node model",
                    p.u, p.v
                ))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub bootstrap: usize,
    pub k_neighbors: usize,
    pub target_exponent: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            bootstrap: DEFAULT_BOOTSTRAP,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            target_exponent: 1.0,
            seed: 0,
        }
    }
}

/// Targets `d^-exponent` (unreachable pairs give 0) next to model
/// similarities `(1 + tau KL)^-1`, in canonical pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairValues {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub targets: Vec<f64>,
    pub similarities: Vec<f64>,
}

pub fn pair_values(
    model: &EmbeddingModel,
    source: PairSource<'_>,
    opts: &EvalOptions,
) -> Result<PairValues> {
    source.check_nodes(model.n_nodes())?;
    let pairs = source.canonical_pairs();
    let div = model.divergence(opts.seed);
    let (targets, similarities): (Vec<f64>, Vec<f64>) = pairs
        .par_iter()
        .map(|p| {
            (
                p.distance.inverse_power(opts.target_exponent),
                model.similarity(&div, p.u.0, p.v.0),
            )
        })
        .unzip();
    if let Some(i) = similarities.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!(
            "similarity of pair ({}, {})",
            pairs[i].u, pairs[i].v
        )));
    }
    Ok(PairValues {
        pairs: pairs.iter().map(|p| (p.u, p.v)).collect(),
        targets,
        similarities,
    })
}

/// Two-column CSV `inverse_distance,similarity`.
pub fn write_pair_values_csv<W: Write>(mut w: W, values: &PairValues) -> Result<()> {
    writeln!(w, "inverse_distance,similarity")?;
    for (t, s) in values.targets.iter().zip(&values.similarities) {
        writeln!(w, "{t},{s}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pearson: f64,
    pub spearman: f64,
    pub mi_mean: f64,
    pub mi_std: f64,
    pub n_pairs: usize,
    /// Pairs entering each MI estimate.
    pub mi_pairs: usize,
    pub bootstrap: usize,
    pub k_neighbors: usize,
    pub target_exponent: f64,
    pub pair_source: String,
    pub seed: u64,
}

const FIELDS: [&str; 11] = [
    "pearson",
    "spearman",
    "mi_mean",
    "mi_std",
    "n_pairs",
    "mi_pairs",
    "bootstrap",
    "k_neighbors",
    "target_exponent",
    "pair_source",
    "seed",
];

impl EvalReport {
    fn values(&self) -> [String; 11] {
        [
            self.pearson.to_string(),
            self.spearman.to_string(),
            self.mi_mean.to_string(),
            self.mi_std.to_string(),
            self.n_pairs.to_string(),
            self.mi_pairs.to_string(),
            self.bootstrap.to_string(),
            self.k_neighbors.to_string(),
            self.target_exponent.to_string(),
            self.pair_source.clone(),
            self.seed.to_string(),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in FIELDS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn csv_header() -> String {
        FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            map.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::format(format!("report is missing `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::format(format!("`{k}` is not a number")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::format(format!("`{k}` is not an integer")))
        };
        Ok(Self {
            pearson: num("pearson")?,
            spearman: num("spearman")?,
            mi_mean: num("mi_mean")?,
            mi_std: num("mi_std")?,
            n_pairs: int("n_pairs")? as usize,
            mi_pairs: int("mi_pairs")? as usize,
            bootstrap: int("bootstrap")? as usize,
            k_neighbors: int("k_neighbors")? as usize,
            target_exponent: num("target_exponent")?,
            pair_source: get("pair_source")?.to_string(),
            seed: int("seed")?,
        })
    }
}

/// Mean and sample standard deviation of MI over bootstrap resamples of
/// the pair values. Zero resamples give a single estimate on the data.
fn bootstrap_mi(xs: &[f64], ys: &[f64], opts: &EvalOptions) -> Result<(f64, f64)> {
    let n = xs.len();
    if opts.bootstrap == 0 {
        return Ok((
            mutual_information_knn(xs, ys, opts.k_neighbors, opts.seed)?,
            0.0,
        ));
    }
    let estimates: Vec<f64> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(b as u64 + 1);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let bx: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let by: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            mutual_information_knn(&bx, &by, opts.k_neighbors, rng.random())
        })
        .collect::<Result<_>>()?;
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let std = if estimates.len() > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

/// Pearson and Spearman correlation between targets and similarities,
/// plus bootstrap MI.
pub fn evaluate_values(
    values: &PairValues,
    source: &str,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let (xs, ys) = (&values.targets, &values.similarities);
    let n = xs.len();
    let r = pearson(xs, ys)?;
    let s = spearman(xs, ys)?;

    let (mx, my) = if n > MI_SUBSAMPLE_ABOVE {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut idx = index::sample(&mut rng, n, MI_SUBSAMPLE_SIZE).into_vec();
        idx.sort_unstable();
        (
            idx.iter().map(|&i| xs[i]).collect::<Vec<_>>(),
            idx.iter().map(|&i| ys[i]).collect::<Vec<_>>(),
        )
    } else {
        (xs.clone(), ys.clone())
    };
    let (mi_mean, mi_std) = bootstrap_mi(&mx, &my, opts)?;

    Ok(EvalReport {
        pearson: r,
        spearman: s,
        mi_mean,
        mi_std,
        n_pairs: n,
        mi_pairs: mx.len(),
        bootstrap: opts.bootstrap,
        k_neighbors: opts.k_neighbors,
        target_exponent: opts.target_exponent,
        pair_source: source.to_string(),
        seed: opts.seed,
    })
}

/// Correlation and MI between inverse distances and model similarities.
pub fn evaluate_model(
    model: &EmbeddingModel,
    source: PairSource<'_>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let values = pair_values(model, source, opts)?;
    evaluate_values(&values, source.descriptor(), opts)
}
