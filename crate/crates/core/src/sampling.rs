//! Training pair construction.
//!
//! Full mode trains on every ordered pair of the all-pairs distance matrix.
//! Sampled mode keeps, per node, at most `B` nearby pairs found by a
//! breadth-first search running in both edge directions, plus at most `B`
//! unreachable pairs drawn from components that precede the node in a
//! topological order of the condensation.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    all_pairs_shortest_paths_with_limit, tarjan_scc, DirectedGraph, Distance, DistanceMatrix,
    NodeId, SccDecomposition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub u: NodeId,
    pub v: NodeId,
    pub distance: Distance,
}

impl TrainingPair {
    pub fn new(u: usize, v: usize, distance: Distance) -> Self {
        Self {
            u: NodeId(u),
            v: NodeId(v),
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSets {
    pub close_pairs: Vec<TrainingPair>,
    pub inf_pairs: Vec<TrainingPair>,
    pub budget: usize,
}

impl SampleSets {
    pub fn len(&self) -> usize {
        self.close_pairs.len() + self.inf_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_pairs(&self) -> Vec<TrainingPair> {
        self.close_pairs
            .iter()
            .chain(&self.inf_pairs)
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Sampled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Sampled => "sampled",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "sampled" => Ok(Mode::Sampled),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Training targets: the dense distance matrix or a sampled pair list.
#[derive(Debug, Clone)]
pub enum TrainingSet {
    Full(DistanceMatrix),
    Sampled(SampleSets),
}

impl TrainingSet {
    /// Number of loss terms this set contributes.
    pub fn term_count(&self) -> usize {
        match self {
            TrainingSet::Full(d) => d.n() * d.n().saturating_sub(1),
            TrainingSet::Sampled(s) => s.len(),
        }
    }

    /// Materialized pair list; full mode enumerates every u ≠ v row by row.
    pub fn pairs(&self) -> Vec<TrainingPair> {
        match self {
            TrainingSet::Full(d) => full_pairs(d),
            TrainingSet::Sampled(s) => s.all_pairs(),
        }
    }
}

pub fn full_pairs(d: &DistanceMatrix) -> Vec<TrainingPair> {
    let n = d.n();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    for u in 0..n {
        for v in 0..n {
            if u != v {
                pairs.push(TrainingPair::new(u, v, d.get(u, v)));
            }
        }
    }
    pairs
}

/// Nearest-first pairs around `source`: forward layers yield
/// `(source, v, d(source, v))`, backward layers yield `(v, source, d(v, source))`.
/// Layers alternate forward/backward, each in ascending node order, until
/// `budget` pairs are collected or both searches are exhausted.
fn close_pairs_for(g: &DirectedGraph, source: usize, budget: usize) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    let mut seen_fwd: HashSet<usize> = HashSet::from([source]);
    let mut seen_bwd: HashSet<usize> = HashSet::from([source]);
    let mut fwd = vec![source];
    let mut bwd = vec![source];
    let mut depth = 0u32;

    while !fwd.is_empty() || !bwd.is_empty() {
        depth += 1;

        fwd = expand_layer(&fwd, &mut seen_fwd, |x| g.out_neighbors(x));
        for &v in &fwd {
            out.push(TrainingPair::new(source, v, Distance::Finite(depth)));
            if out.len() == budget {
                return out;
            }
        }

        bwd = expand_layer(&bwd, &mut seen_bwd, |x| g.in_neighbors(x));
        for &v in &bwd {
            out.push(TrainingPair::new(v, source, Distance::Finite(depth)));
            if out.len() == budget {
                return out;
            }
        }
    }
    out
}

fn expand_layer<'g>(
    frontier: &[usize],
    seen: &mut HashSet<usize>,
    neighbors: impl Fn(usize) -> &'g [usize],
) -> Vec<usize> {
    let mut next = Vec::new();
    for &x in frontier {
        for &y in neighbors(x) {
            if seen.insert(y) {
                next.push(y);
            }
        }
    }
    next.sort_unstable();
    next
}

/// Per-node bidirectional BFS samples, concatenated in source order.
/// The same ordered pair can be found from both of its endpoints; see
/// [`build_training_set`] for the deduplicated set.
pub fn sample_close_pairs(g: &DirectedGraph, budget: usize) -> Result<Vec<TrainingPair>> {
    if budget == 0 {
        return Err(Error::invalid("sample budget B must be at least 1"));
    }
    let per_node: Vec<Vec<TrainingPair>> = (0..g.n_nodes())
        .into_par_iter()
        .map(|u| close_pairs_for(g, u, budget))
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}

/// For each node, up to `budget` targets drawn uniformly without replacement
/// from the components placed before its own in the topological order.
/// Those targets are unreachable, since edges only lead forward.
pub fn sample_infinite_pairs(
    g: &DirectedGraph,
    scc: &SccDecomposition,
    budget: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    if budget == 0 {
        return Err(Error::invalid("sample budget B must be at least 1"));
    }
    // nodes listed component by component in topological order;
    // prefix[i] = number of nodes in components with topological index < i
    let mut ordered = Vec::with_capacity(g.n_nodes());
    let mut prefix = Vec::with_capacity(scc.n_components() + 1);
    prefix.push(0);
    for &c in scc.topo_order() {
        ordered.extend_from_slice(scc.members(c));
        prefix.push(ordered.len());
    }

    let per_node: Vec<Vec<TrainingPair>> = (0..g.n_nodes())
        .into_par_iter()
        .map(|u| {
            let candidates = prefix[scc.node_topo_index(u)];
            let take = budget.min(candidates);
            if take == 0 {
                return Vec::new();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u as u64);
            index::sample(&mut rng, candidates, take)
                .into_iter()
                .map(|i| TrainingPair::new(u, ordered[i], Distance::Infinite))
                .collect()
        })
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}

/// Full mode returns the dense distance matrix (subject to `matrix_limit`);
/// sampled mode returns deduplicated close pairs and infinite pairs.
pub fn build_training_set(
    g: &DirectedGraph,
    mode: Mode,
    budget: usize,
    seed: u64,
    matrix_limit: usize,
) -> Result<TrainingSet> {
    match mode {
        Mode::Full => Ok(TrainingSet::Full(all_pairs_shortest_paths_with_limit(
            g,
            matrix_limit,
        )?)),
        Mode::Sampled => {
            let scc = tarjan_scc(g);
            let mut seen = HashSet::new();
            let close_pairs = sample_close_pairs(g, budget)?
                .into_iter()
                .filter(|p| seen.insert((p.u, p.v)))
                .collect();
            let inf_pairs = sample_infinite_pairs(g, &scc, budget, seed)?;
            Ok(TrainingSet::Sampled(SampleSets {
                close_pairs,
                inf_pairs,
                budget,
            }))
        }
    }
}

/// Header metadata of a training-pair file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFileHeader {
    pub mode: Mode,
    pub budget: Option<usize>,
    pub seed: u64,
    pub n_nodes: usize,
}

/// `# mode=.. B=.. seed=.. n=..` followed by a `u,v,distance` CSV.
pub fn write_pairs_csv<W: Write>(
    mut w: W,
    header: &PairFileHeader,
    pairs: &[TrainingPair],
) -> Result<()> {
    let budget = header
        .budget
        .map_or_else(|| "none".to_string(), |b| b.to_string());
    writeln!(
        w,
        "# mode={} B={} seed={} n={}",
        header.mode, budget, header.seed, header.n_nodes
    )?;
    writeln!(w, "u,v,distance")?;
    for p in pairs {
        writeln!(w, "{},{},{}", p.u, p.v, p.distance)?;
    }
    Ok(())
}

pub fn read_pairs_csv<R: BufRead>(r: R) -> Result<(PairFileHeader, Vec<TrainingPair>)> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::format("pair file: missing header"))?;
    let header = parse_pair_header(&first?)?;
    let mut pairs = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == "u,v,distance" {
            continue;
        }
        let bad = || Error::Parse {
            line: i + 1,
            message: format!("invalid pair row {line:?}"),
        };
        let mut cols = line.split(',');
        let (Some(u), Some(v), Some(d), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(bad());
        };
        let u: usize = u.trim().parse().map_err(|_| bad())?;
        let v: usize = v.trim().parse().map_err(|_| bad())?;
        let d = Distance::parse(d).ok_or_else(bad)?;
        if u == v || u >= header.n_nodes || v >= header.n_nodes {
            return Err(bad());
        }
        pairs.push(TrainingPair::new(u, v, d));
    }
    Ok((header, pairs))
}

fn parse_pair_header(line: &str) -> Result<PairFileHeader> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::format("pair file: first line must be a '#' header"))?;
    let (mut mode, mut budget, mut seed, mut n) = (None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::format(format!("pair file: bad header field {field:?}")))?;
        let num = || {
            value
                .parse::<u64>()
                .map_err(|_| Error::format(format!("pair file: bad value for {key}")))
        };
        match key {
            "mode" => mode = Some(value.parse::<Mode>()?),
            "B" if value == "none" => {}
            "B" => budget = Some(num()? as usize),
            "seed" => seed = Some(num()?),
            "n" => n = Some(num()? as usize),
            _ => {}
        }
    }
    match (mode, seed, n) {
        (Some(mode), Some(seed), Some(n_nodes)) => Ok(PairFileHeader {
            mode,
            budget,
            seed,
            n_nodes,
        }),
        _ => Err(Error::format("pair file: header needs mode, seed and n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_shortest_paths, generate_erdos_renyi, generate_toy_graph};

    fn chain() -> DirectedGraph {
        DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn close_pairs_nearest_successor() {
        let pairs = close_pairs_for(&chain(), 0, 1);
        assert_eq!(pairs, vec![TrainingPair::new(0, 1, Distance::Finite(1))]);
    }

    #[test]
    fn close_pairs_exhaust_before_budget() {
        let pairs = close_pairs_for(&chain(), 1, 4);
        assert_eq!(
            pairs,
            vec![
                TrainingPair::new(1, 2, Distance::Finite(1)),
                TrainingPair::new(0, 1, Distance::Finite(1)),
            ]
        );
    }

    #[test]
    fn infinite_pairs_on_dag() {
        let g = chain();
        let scc = tarjan_scc(&g);
        let pairs = sample_infinite_pairs(&g, &scc, 2, 0).unwrap();
        let mut from_c: Vec<_> = pairs.iter().filter(|p| p.u == NodeId(2)).collect();
        from_c.sort_by_key(|p| p.v);
        assert_eq!(
            from_c,
            vec![
                &TrainingPair::new(2, 0, Distance::Infinite),
                &TrainingPair::new(2, 1, Distance::Infinite)
            ]
        );
        assert!(pairs.iter().all(|p| p.u != NodeId(0)));
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(sample_close_pairs(&chain(), 0).is_err());
    }

    #[test]
    fn sampled_pairs_are_sound_and_within_budget() {
        for seed in 0..100u64 {
            let n = 2 + (seed % 30) as usize;
            let g = generate_erdos_renyi(n, 0.08, seed).unwrap();
            let d = all_pairs_shortest_paths(&g).unwrap();
            let budget = 1 + (seed % 6) as usize;
            let TrainingSet::Sampled(s) =
                build_training_set(&g, Mode::Sampled, budget, seed, usize::MAX).unwrap()
            else {
                unreachable!()
            };
            for p in &s.close_pairs {
                assert_eq!(p.distance, d.get(p.u.0, p.v.0));
            }
            for p in &s.inf_pairs {
                assert_eq!(d.get(p.u.0, p.v.0), Distance::Infinite);
            }
            for u in 0..n {
                assert!(s.inf_pairs.iter().filter(|p| p.u.0 == u).count() <= budget);
            }
            assert!(s.len() <= 2 * budget * n);
        }
    }

    #[test]
    fn large_budget_covers_all_finite_pairs() {
        let g = generate_toy_graph();
        let d = all_pairs_shortest_paths(&g).unwrap();
        let TrainingSet::Sampled(s) =
            build_training_set(&g, Mode::Sampled, 25, 1, usize::MAX).unwrap()
        else {
            unreachable!()
        };
        let got: HashSet<_> = s.close_pairs.iter().map(|p| (p.u.0, p.v.0)).collect();
        let expected: HashSet<_> = (0..25)
            .flat_map(|u| (0..25).map(move |v| (u, v)))
            .filter(|&(u, v)| u != v && d.get(u, v).is_finite())
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn full_mode_term_count() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Full, 0, 0, usize::MAX).unwrap();
        assert_eq!(set.term_count(), 25 * 24);
        assert_eq!(set.pairs().len(), 600);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = generate_erdos_renyi(60, 0.03, 4).unwrap();
        let scc = tarjan_scc(&g);
        let a = sample_infinite_pairs(&g, &scc, 5, 11).unwrap();
        let b = sample_infinite_pairs(&g, &scc, 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_csv_round_trip() {
        let g = generate_toy_graph();
        let set = build_training_set(&g, Mode::Sampled, 10, 3, usize::MAX).unwrap();
        let pairs = set.pairs();
        let header = PairFileHeader {
            mode: Mode::Sampled,
            budget: Some(10),
            seed: 3,
            n_nodes: 25,
        };
        let mut buf = Vec::new();
        write_pairs_csv(&mut buf, &header, &pairs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# mode=sampled B=10 seed=3 n=25\nu,v,distance\n"));
        assert!(text.contains(",inf\n"));
        let (h, back) = read_pairs_csv(text.as_bytes()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, pairs);
    }
}
