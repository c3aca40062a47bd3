//! Directed graph storage, edge-list parsing and the graph algorithms the
//! embedding pipeline needs: all-pairs hop distances, strongly connected
//! components with a topological order of the condensation, dataset
//! statistics and a couple of generators.

mod distance;
mod generate;
mod scc;
mod stats;

pub use distance::{
    all_pairs_shortest_paths, all_pairs_shortest_paths_with_limit, bfs_distances, Distance,
    DistanceMatrix, DEFAULT_MATRIX_LIMIT, INFINITE_HOPS,
};
pub use generate::{generate_erdos_renyi, generate_toy_graph, TOY_BLOCKS, TOY_BLOCK_SIZE};
pub use scc::{tarjan_scc, SccDecomposition};
pub use stats::{graph_stats, GraphStats};

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Immutable directed graph with sorted successor and predecessor lists.
///
/// Self-loops and parallel edges are never stored. `labels[i]` is the
/// external label node `i` carried in its source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    labels: Vec<i64>,
    n_edges: usize,
}

impl DirectedGraph {
    /// Builds a graph over nodes `0..n` labelled by their index. Self-loops
    /// and duplicates in `edges` are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let labels = (0..n as i64).collect();
        Self::from_labelled_edges(labels, edges)
    }

    fn from_labelled_edges(
        labels: Vec<i64>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut out_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u != v {
                out_sets[u].insert(v);
            }
        }
        let out_adj: Vec<Vec<usize>> = out_sets
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        let mut in_adj = vec![Vec::new(); n];
        for (u, succ) in out_adj.iter().enumerate() {
            for &v in succ {
                in_adj[v].push(u);
            }
        }
        // pushes happen in ascending u, so predecessor lists are already sorted
        let n_edges = out_adj.iter().map(Vec::len).sum();
        Ok(Self {
            out_adj,
            in_adj,
            labels,
            n_edges,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.out_adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_adj[u]
    }

    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        &self.in_adj[u]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_adj[u].len()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].binary_search(&v).is_ok()
    }

    /// All edges in (source, target) lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, succ)| succ.iter().map(move |&v| (u, v)))
    }

    pub fn label(&self, u: usize) -> i64 {
        self.labels[u]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn node_of_label(&self, label: i64) -> Option<NodeId> {
        self.labels.iter().position(|&l| l == label).map(NodeId)
    }

    /// Parses a whitespace separated edge list. Lines starting with `%` or
    /// `#` are comments, columns after the second are ignored, and external
    /// labels are remapped to dense ids in order of first appearance.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut index: HashMap<i64, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |label: i64, labels: &mut Vec<i64>| -> usize {
            *index.entry(label).or_insert_with(|| {
                labels.push(label);
                labels.len() - 1
            })
        };

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected at least two columns".into(),
                });
            };
            let parse = |tok: &str| {
                tok.parse::<i64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("invalid node label {tok:?}"),
                })
            };
            let (a, b) = (parse(a)?, parse(b)?);
            let u = intern(a, &mut labels);
            let v = intern(b, &mut labels);
            edges.push((u, v));
        }

        if edges.is_empty() {
            return Err(Error::EmptyInput);
        }
        Self::from_labelled_edges(labels, edges)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::parse_edge_list(text.as_bytes())
    }

    /// Writes one `label label` line per edge. Isolated nodes are not
    /// representable in the edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }
}
