use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, DistanceMatrix, NodeId, INFINITE_HOPS};

/// Random-subset L1 embedding of the symmetrized hop distance
/// `min(d_uv, d_vu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BourgainEmbedding {
    pub m: usize,
    /// `coords[j][i]` is the distance from node `j` to subset `i`.
    pub coords: Vec<Vec<u32>>,
    pub subsets: Vec<Vec<NodeId>>,
}

/// `ceil(log_base(n))`, at least 1.
pub fn bourgain_dimension(n: usize, base: f64) -> usize {
    if n <= 1 {
        return 1;
    }
    ((n as f64).ln() / base.ln()).ceil().max(1.0) as usize
}

/// Hop distances on the underlying undirected graph from the nearest
/// member of `sources`. This is the shortest-path closure of
/// `min(d_uv, d_vu)`: every finite value of the latter is realised by a
/// directed path, and every edge has symmetrized distance 1.
fn undirected_distance_to_set(g: &DirectedGraph, sources: &[usize]) -> Vec<u32> {
    let mut dist = vec![INFINITE_HOPS; g.n_nodes()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in g.out_neighbors(u).iter().chain(g.in_neighbors(u)) {
            if dist[v] == INFINITE_HOPS {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Embedding with `m = ceil(ln n)` coordinates.
pub fn bourgain_embed(
    g: &DirectedGraph,
    d: &DistanceMatrix,
    seed: u64,
) -> Result<BourgainEmbedding> {
    let m = bourgain_dimension(g.n_nodes(), std::f64::consts::E);
    bourgain_embed_with_dimension(g, d, m, seed)
}

/// Subset `i` (1-based) holds each node independently with probability
/// `2^-i`. Coordinate `i` of node `j` is its distance to subset `i` under
/// the closure of the symmetrized distance, with `n` standing in for an
/// empty or unreachable subset.
pub fn bourgain_embed_with_dimension(
    g: &DirectedGraph,
    d: &DistanceMatrix,
    m: usize,
    seed: u64,
) -> Result<BourgainEmbedding> {
    let n = g.n_nodes();
    if d.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.n(),
        });
    }
    if m == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets = Vec::with_capacity(m);
    let mut coords = vec![Vec::with_capacity(m); n];
    let cap = n as u32;
    for i in 1..=m {
        let p = 0.5f64.powi(i as i32);
        let members: Vec<usize> = (0..n).filter(|_| rng.random_bool(p)).collect();
        let dist = undirected_distance_to_set(g, &members);
        for (row, &x) in coords.iter_mut().zip(&dist) {
            row.push(if x == INFINITE_HOPS { cap } else { x });
        }
        subsets.push(members.into_iter().map(NodeId).collect());
    }
    Ok(BourgainEmbedding { m, coords, subsets })
}

impl BourgainEmbedding {
    pub fn l1_distance(&self, u: usize, v: usize) -> u64 {
        self.coords[u]
            .iter()
            .zip(&self.coords[v])
            .map(|(&a, &b)| a.abs_diff(b) as u64)
            .sum()
    }

    /// CSV with header `node,x1,..,xm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "node")?;
        for i in 1..=self.m {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for (j, row) in self.coords.iter().enumerate() {
            write!(w, "{j}")?;
            for x in row {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Upper-bound check `|x_u - x_v|_1 <= m * min(d_uv, d_vu)` over unordered
/// pairs with finite symmetrized distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BourgainReport {
    pub m: usize,
    pub finite_pairs: usize,
    /// Pairs with no path in either direction; excluded from the check.
    pub infinite_pairs: usize,
    pub violations: usize,
    /// Largest and smallest `|x_u - x_v|_1 / min(d_uv, d_vu)`.
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl BourgainReport {
    pub fn all_satisfied(&self) -> bool {
        self.violations == 0
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "m={}\nfinite_pairs={}\ninfinite_pairs={}\nviolations={}\nmax_ratio={}\nmin_ratio={}\n",
            self.m,
            self.finite_pairs,
            self.infinite_pairs,
            self.violations,
            self.max_ratio,
            self.min_ratio
        )
    }
}

pub fn bourgain_report(emb: &BourgainEmbedding, d: &DistanceMatrix) -> Result<BourgainReport> {
    let n = d.n();
    if emb.coords.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: emb.coords.len(),
        });
    }
    let mut report = BourgainReport {
        m: emb.m,
        finite_pairs: 0,
        infinite_pairs: 0,
        violations: 0,
        max_ratio: 0.0,
        min_ratio: f64::INFINITY,
    };
    for u in 0..n {
        for v in u + 1..n {
            let sym = d.raw(u, v).min(d.raw(v, u));
            if sym == INFINITE_HOPS {
                report.infinite_pairs += 1;
                continue;
            }
            report.finite_pairs += 1;
            let l1 = emb.l1_distance(u, v);
            if l1 > emb.m as u64 * sym as u64 {
                report.violations += 1;
            }
            let ratio = l1 as f64 / sym as f64;
            report.max_ratio = report.max_ratio.max(ratio);
            report.min_ratio = report.min_ratio.min(ratio);
        }
    }
    if report.finite_pairs == 0 {
        report.min_ratio = 0.0;
    }
    Ok(report)
}
