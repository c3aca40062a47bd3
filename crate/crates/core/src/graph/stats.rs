use serde::{Deserialize, Serialize};

use super::{DirectedGraph, DistanceMatrix};
use crate::error::{Error, Result};

/// Dataset summary: size, share of unreachable ordered pairs, reciprocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    /// Unreachable ordered pairs over all n² pairs (diagonal counts as finite).
    pub infinite_ratio: f64,
    /// Fraction of edges (u, v) whose reverse (v, u) is also an edge.
    pub reciprocity: f64,
}

pub fn graph_stats(g: &DirectedGraph, d: &DistanceMatrix) -> Result<GraphStats> {
    let n = g.n_nodes();
    if d.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: d.n(),
        });
    }
    let infinite_ratio = if n == 0 {
        0.0
    } else {
        d.count_infinite() as f64 / (n as f64 * n as f64)
    };
    let reciprocated = g.edges().filter(|&(u, v)| g.has_edge(v, u)).count();
    let reciprocity = if g.n_edges() == 0 {
        0.0
    } else {
        reciprocated as f64 / g.n_edges() as f64
    };
    Ok(GraphStats {
        n_nodes: n,
        n_edges: g.n_edges(),
        infinite_ratio,
        reciprocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_shortest_paths, generate_erdos_renyi};

    #[test]
    fn two_cycle() {
        let g = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        let s = graph_stats(&g, &d).unwrap();
        assert_eq!(s.infinite_ratio, 0.0);
        assert_eq!(s.reciprocity, 1.0);
    }

    #[test]
    fn single_edge() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        let s = graph_stats(&g, &d).unwrap();
        assert_eq!(s.infinite_ratio, 0.25);
        assert_eq!(s.reciprocity, 0.0);
    }

    #[test]
    fn symmetric_graph_is_fully_reciprocal() {
        let g = generate_erdos_renyi(20, 0.2, 9).unwrap();
        let sym: Vec<_> = g.edges().flat_map(|(u, v)| [(u, v), (v, u)]).collect();
        let g = DirectedGraph::from_edges(20, sym).unwrap();
        let d = all_pairs_shortest_paths(&g).unwrap();
        assert_eq!(graph_stats(&g, &d).unwrap().reciprocity, 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        let other = DirectedGraph::from_edges(3, [(0, 1)]).unwrap();
        let d = all_pairs_shortest_paths(&other).unwrap();
        assert!(graph_stats(&g, &d).is_err());
    }
}
