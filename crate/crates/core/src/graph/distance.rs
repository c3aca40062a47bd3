use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DirectedGraph;
use crate::error::{Error, Result};

/// Reserved matrix entry for unreachable pairs.
pub const INFINITE_HOPS: u32 = u32::MAX;

/// Largest node count for which a dense n×n matrix is built by default
/// (about 1 GiB of `u32` entries).
pub const DEFAULT_MATRIX_LIMIT: usize = 16_384;

const MAGIC: &[u8; 4] = b"SMD1";

/// A directed hop distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    pub fn from_raw(raw: u32) -> Self {
        if raw == INFINITE_HOPS {
            Distance::Infinite
        } else {
            Distance::Finite(raw)
        }
    }

    pub fn raw(self) -> u32 {
        match self {
            Distance::Finite(d) => d,
            Distance::Infinite => INFINITE_HOPS,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    /// `d^(-exponent)`, with infinity mapped to 0.
    pub fn inverse_power(self, exponent: f64) -> f64 {
        match self {
            Distance::Finite(d) => (d as f64).powf(-exponent),
            Distance::Infinite => 0.0,
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        let token = token.trim();
        if token.eq_ignore_ascii_case("inf") {
            Some(Distance::Infinite)
        } else {
            token
                .parse::<u32>()
                .ok()
                .filter(|&d| d != INFINITE_HOPS)
                .map(Distance::Finite)
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

/// Dense all-pairs hop distances, row-major, with [`INFINITE_HOPS`] marking
/// unreachable targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<u32>,
}

impl DistanceMatrix {
    pub fn from_raw(n: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn raw(&self, u: usize, v: usize) -> u32 {
        self.entries[u * self.n + v]
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Distance {
        Distance::from_raw(self.raw(u, v))
    }

    pub fn row(&self, u: usize) -> &[u32] {
        &self.entries[u * self.n..(u + 1) * self.n]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn count_infinite(&self) -> usize {
        self.entries.iter().filter(|&&d| d == INFINITE_HOPS).count()
    }

    /// Binary layout: `SMD1`, n as u64 LE, then n² u32 LE entries.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.n * 4);
        for row in self.entries.chunks(self.n.max(1)) {
            buf.clear();
            for &d in row {
                buf.extend_from_slice(&d.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("distance matrix: bad magic bytes"));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let n = u64::from_le_bytes(len) as usize;
        let count = n
            .checked_mul(n)
            .ok_or_else(|| Error::format("distance matrix: size overflow"))?;
        let mut bytes = vec![0u8; count * 4];
        r.read_exact(&mut bytes)?;
        let entries = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::format("distance matrix: trailing bytes"));
        }
        Self::from_raw(n, entries)
    }

    /// Comma separated rows, `inf` for unreachable pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = String::new();
        for u in 0..self.n {
            line.clear();
            for v in 0..self.n {
                if v > 0 {
                    line.push(',');
                }
                line.push_str(&self.get(u, v).to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut n = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<u32> = line
                .split(',')
                .map(|t| {
                    Distance::parse(t)
                        .map(Distance::raw)
                        .ok_or_else(|| Error::Parse {
                            line: i + 1,
                            message: format!("invalid distance {t:?}"),
                        })
                })
                .collect::<Result<_>>()?;
            match n {
                None => n = Some(row.len()),
                Some(m) if m != row.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: row.len(),
                    })
                }
                _ => {}
            }
            entries.extend(row);
        }
        Self::from_raw(n.unwrap_or(0), entries)
    }
}

/// Single-source BFS hop counts; unreachable nodes get [`INFINITE_HOPS`].
pub fn bfs_distances(g: &DirectedGraph, source: usize) -> Vec<u32> {
    let mut dist = vec![INFINITE_HOPS; g.n_nodes()];
    bfs_into(g, source, &mut dist, &mut VecDeque::new());
    dist
}

fn bfs_into(g: &DirectedGraph, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(INFINITE_HOPS);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in g.out_neighbors(u) {
            if dist[v] == INFINITE_HOPS {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
}

pub fn all_pairs_shortest_paths(g: &DirectedGraph) -> Result<DistanceMatrix> {
    all_pairs_shortest_paths_with_limit(g, DEFAULT_MATRIX_LIMIT)
}

/// One BFS per source, rows filled in parallel. Each row is written only by
/// its own search, so the result does not depend on scheduling.
pub fn all_pairs_shortest_paths_with_limit(
    g: &DirectedGraph,
    limit: usize,
) -> Result<DistanceMatrix> {
    let n = g.n_nodes();
    if n > limit {
        return Err(Error::Capacity { n, limit });
    }
    let mut entries = vec![INFINITE_HOPS; n * n];
    if n > 0 {
        entries
            .par_chunks_mut(n)
            .enumerate()
            .for_each_init(VecDeque::new, |queue, (s, row)| bfs_into(g, s, row, queue));
    }
    DistanceMatrix::from_raw(n, entries)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::graph::generate_erdos_renyi;

    fn floyd_warshall(g: &DirectedGraph) -> Vec<Vec<u64>> {
        let n = g.n_nodes();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (u, row) in d.iter_mut().enumerate() {
            row[u] = 0;
        }
        for (u, v) in g.edges() {
            d[u][v] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn chain_distances() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        assert_eq!(d.get(0, 2), Distance::Finite(2));
        assert_eq!(d.get(2, 0), Distance::Infinite);
        assert_eq!(d.get(1, 1), Distance::Finite(0));
    }

    #[test]
    fn matches_floyd_warshall_on_small_random_graphs() {
        for seed in 0..300u64 {
            let n = 1 + (seed % 8) as usize;
            let p = [0.1, 0.25, 0.4][(seed % 3) as usize];
            let g = generate_erdos_renyi(n, p, seed).unwrap();
            let d = all_pairs_shortest_paths(&g).unwrap();
            let fw = floyd_warshall(&g);
            for u in 0..n {
                for v in 0..n {
                    let expected = if fw[u][v] >= u64::MAX / 4 {
                        Distance::Infinite
                    } else {
                        Distance::Finite(fw[u][v] as u32)
                    };
                    assert_eq!(d.get(u, v), expected, "seed {seed} pair ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn capacity_limit() {
        let g = generate_erdos_renyi(10, 0.2, 1).unwrap();
        assert!(matches!(
            all_pairs_shortest_paths_with_limit(&g, 9),
            Err(Error::Capacity { n: 10, limit: 9 })
        ));
    }

    #[test]
    fn binary_and_csv_formats() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        let mut bin = Vec::new();
        d.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..4], b"SMD1");
        assert_eq!(&bin[4..12], &3u64.to_le_bytes());
        assert_eq!(bin.len(), 12 + 9 * 4);
        // entry (0,2) = 2 and (1,0) = inf
        assert_eq!(&bin[12 + 2 * 4..12 + 3 * 4], &2u32.to_le_bytes());
        assert_eq!(&bin[12 + 3 * 4..12 + 4 * 4], &[0xFF; 4]);
        assert_eq!(DistanceMatrix::read_binary(&bin[..]).unwrap(), d);
        assert!(DistanceMatrix::read_binary(&bin[..bin.len() - 1]).is_err());

        let mut csv = Vec::new();
        d.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text, "0,1,2\ninf,0,1\ninf,inf,0\n");
        assert_eq!(DistanceMatrix::read_csv(text.as_bytes()).unwrap(), d);
    }

    #[test]
    fn triangle_inequality() {
        let g = generate_erdos_renyi(30, 0.08, 3).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        for u in 0..30 {
            for v in 0..30 {
                for w in 0..30 {
                    if let (Distance::Finite(a), Distance::Finite(b)) = (d.get(u, v), d.get(v, w)) {
                        assert!(d.get(u, w) <= Distance::Finite(a + b));
                    }
                }
            }
        }
        for u in 0..30 {
            for v in 0..30 {
                assert_eq!(d.raw(u, v) == 1, g.has_edge(u, v));
            }
        }
    }
}
