use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DirectedGraph;
use crate::error::{Error, Result};

pub const TOY_BLOCKS: usize = 5;
pub const TOY_BLOCK_SIZE: usize = 5;

/// Block-local edges shared by the four outer blocks: a reciprocated pair
/// followed by a chain, so nodes 0 and 1 reach the whole block.
const CHAIN_BLOCK: [(usize, usize); 5] = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 4)];

/// Center block: a directed 5-cycle with one reciprocated edge.
const CYCLE_BLOCK: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 0)];

/// (from block, from node, to block, to node). Blocks 0 and 1 are sources,
/// block 2 is the center, blocks 3 and 4 are sinks.
const BRIDGES: [(usize, usize, usize, usize); 4] =
    [(0, 4, 2, 0), (1, 4, 2, 2), (2, 3, 3, 0), (2, 4, 4, 0)];

/// Deterministic 25-node, 30-edge network in five blocks of five: two
/// source blocks feed a strongly connected center block, which feeds two
/// sink blocks. Source blocks cannot reach each other, sinks reach nothing
/// outside themselves.
pub fn generate_toy_graph() -> DirectedGraph {
    let n = TOY_BLOCKS * TOY_BLOCK_SIZE;
    let at = |block: usize, node: usize| block * TOY_BLOCK_SIZE + node;
    let mut edges = Vec::with_capacity(30);
    for block in 0..TOY_BLOCKS {
        let local: &[(usize, usize)] = if block == 2 {
            &CYCLE_BLOCK
        } else {
            &CHAIN_BLOCK
        };
        edges.extend(local.iter().map(|&(a, b)| (at(block, a), at(block, b))));
    }
    edges.extend(BRIDGES.iter().map(|&(ba, a, bb, b)| (at(ba, a), at(bb, b))));
    DirectedGraph::from_edges(n, edges).expect("toy edges are in range")
}

/// G(n, p) digraph: every ordered pair u ≠ v independently with probability p.
pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<DirectedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}
