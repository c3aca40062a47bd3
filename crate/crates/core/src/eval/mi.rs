use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

/// Relative size of the tie-breaking noise added to both coordinates.
pub const JITTER_SCALE: f64 = 1e-10;

const LEAF_SIZE: usize = 8;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Two-dimensional k-d tree answering k-nearest-neighbour radius queries
/// under the max norm.
struct KdTree<'a> {
    pts: &'a [[f64; 2]],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    fn new(pts: &'a [[f64; 2]]) -> Self {
        let mut tree = KdTree {
            pts,
            order: (0..pts.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, pts.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let pts = self.pts;
        let slice = &mut self.order[start..end];
        let spread = |axis: usize| {
            let (lo, hi) = slice
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(pts[i][axis]), hi.max(pts[i][axis]))
                });
            hi - lo
        };
        let axis = if spread(0) >= spread(1) { 0 } else { 1 };
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = pts[slice[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, start + mid);
        let right = self.build(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Max-norm distance from point `i` to its `k`-th nearest other point.
    fn kth_distance(&self, i: usize, k: usize) -> f64 {
        let mut best = Vec::with_capacity(k + 1);
        self.search(0, i, k, &mut best);
        best[k - 1]
    }

    fn search(&self, node: usize, i: usize, k: usize, best: &mut Vec<f64>) {
        let q = self.pts[i];
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == i {
                        continue;
                    }
                    let p = self.pts[j];
                    let d = (q[0] - p[0]).abs().max((q[1] - p[1]).abs());
                    if best.len() < k || d < best[k - 1] {
                        let pos = best.partition_point(|&b| b <= d);
                        best.insert(pos, d);
                        best.truncate(k);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, i, k, best);
                if best.len() < k || diff.abs() < best[k - 1] {
                    self.search(far, i, k, best);
                }
            }
        }
    }
}

/// Number of entries of `sorted` strictly within `eps` of `x`, excluding
/// one copy of `x` itself.
fn count_within(sorted: &[f64], x: f64, eps: f64) -> usize {
    let hi = sorted.partition_point(|&v| v < x + eps);
    let lo = sorted.partition_point(|&v| v <= x - eps);
    hi.saturating_sub(lo).saturating_sub(1)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

fn jittered(xs: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s = std_dev(xs);
    let scale = JITTER_SCALE * if s > 0.0 { s } else { 1.0 };
    xs.iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(rng);
            x + scale * z
        })
        .collect()
}

/// Kraskov–Stögbauer–Grassberger estimate (first variant, max norm) of the
/// mutual information between `xs` and `ys`, in nats, floored at 0.
///
/// Seeded Gaussian jitter of relative size [`JITTER_SCALE`] breaks ties.
pub fn mutual_information_knn(
    xs: &[f64],
    ys: &[f64],
    k_neighbors: usize,
    seed: u64,
) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let n = xs.len();
    if k_neighbors == 0 || k_neighbors >= n {
        return Err(Error::invalid(format!(
            "k_neighbors = {k_neighbors} needs 1 <= k < n = {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mutual information input".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = jittered(xs, &mut rng);
    let y = jittered(ys, &mut rng);
    let pts: Vec<[f64; 2]> = x.iter().zip(&y).map(|(&a, &b)| [a, b]).collect();
    let tree = KdTree::new(&pts);

    let mut sx = x.clone();
    let mut sy = y.clone();
    sx.sort_by(f64::total_cmp);
    sy.sort_by(f64::total_cmp);

    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let eps = tree.kth_distance(i, k_neighbors);
            let nx = count_within(&sx, x[i], eps);
            let ny = count_within(&sy, y[i], eps);
            digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0)
        })
        .collect();
    let mean = terms.iter().sum::<f64>() / n as f64;
    let mi = digamma(k_neighbors as f64) + digamma(n as f64) - mean;
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn bivariate_normal(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            xs.push(a);
            ys.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        (xs, ys)
    }

    fn brute_kth(pts: &[[f64; 2]], i: usize, k: usize) -> f64 {
        let mut d: Vec<f64> = pts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| (p[0] - pts[i][0]).abs().max((p[1] - pts[i][1]).abs()))
            .collect();
        d.sort_by(f64::total_cmp);
        d[k - 1]
    }

    #[test]
    fn tree_matches_brute_force_neighbours() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2usize, 9, 40, 300] {
            // a coarse first axis mimics the discrete distance targets
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(0..4) as f64, rng.random::<f64>()])
                .collect();
            let tree = KdTree::new(&pts);
            for k in 1..n.min(7) {
                for i in 0..n {
                    assert_eq!(tree.kth_distance(i, k), brute_kth(&pts, i, k));
                }
            }
        }
    }

    #[test]
    fn gaussian_mi_matches_analytic_value() {
        let (xs, ys) = bivariate_normal(10_000, 0.9, 1);
        let mi = mutual_information_knn(&xs, &ys, 5, 0).unwrap();
        let exact = -0.5 * (1.0f64 - 0.81).ln();
        assert!((mi - exact).abs() < 0.05, "{mi} vs {exact}");
    }

    #[test]
    fn independent_samples_have_near_zero_mi() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let mi = mutual_information_knn(&xs, &ys, 5, 0).unwrap();
        assert!(mi.abs() < 0.02, "{mi}");
    }

    #[test]
    fn less_noise_means_more_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let mut last = 0.0;
        for noise in [1e-1, 1e-2, 1e-3] {
            let ys: Vec<f64> = xs.iter().map(|x| x + noise * rng.random::<f64>()).collect();
            let mi = mutual_information_knn(&xs, &ys, 5, 0).unwrap();
            assert!(mi > last + 0.5, "{mi} after {last}");
            last = mi;
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (xs, ys) = bivariate_normal(500, 0.5, 8);
        let a = mutual_information_knn(&xs, &ys, 3, 17).unwrap();
        assert_eq!(a, mutual_information_knn(&xs, &ys, 3, 17).unwrap());
    }

    #[test]
    fn ties_are_broken_by_jitter() {
        let xs: Vec<f64> = (0..400).map(|i| (i % 4) as f64).collect();
        let ys: Vec<f64> = (0..400).map(|i| (i % 4) as f64 * 2.0).collect();
        let mi = mutual_information_knn(&xs, &ys, 3, 0).unwrap();
        assert!(mi.is_finite() && mi > 1.0);
    }

    #[test]
    fn rejects_bad_neighbour_counts() {
        let xs = [1.0, 2.0, 3.0];
        assert!(mutual_information_knn(&xs, &xs, 3, 0).is_err());
        assert!(mutual_information_knn(&xs, &xs, 0, 0).is_err());
        assert!(mutual_information_knn(&xs, &xs[..2], 1, 0).is_err());
    }
}
