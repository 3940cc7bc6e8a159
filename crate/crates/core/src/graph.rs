//! Directed network topologies.
//!
//! Orientation convention used throughout the crate: an edge `(tail, head)`
//! means `tail` sends to `head`, so `tail` is an in-neighbor of `head`. A shift
//! entry `S[i, j]` may be nonzero iff `i == j` or `(j, i)` is an edge, which
//! makes `(S y)_i` computable from the messages node `i` receives.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Regenerations attempted by [`DirectedGraph::generate_erdos_renyi`] before
/// giving up on strong connectivity.
pub const CONNECTIVITY_RETRY_BUDGET: usize = 1000;

/// Node count plus a set of directed edges without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    // Row-major n×n membership: present[tail * n + head].
    present: Vec<bool>,
    // Sorted by (tail, head).
    edges: Vec<(usize, usize)>,
}

impl DirectedGraph {
    /// Builds a graph from `(tail, head)` pairs. Duplicate pairs collapse;
    /// out-of-range indices and self-loops are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "graph needs at least one node"));
        }
        let mut present = vec![false; n * n];
        for (tail, head) in edges {
            if tail >= n || head >= n {
                return Err(Error::EdgeOutOfRange { tail, head, n });
            }
            if tail == head {
                return Err(Error::SelfLoop(tail));
            }
            present[tail * n + head] = true;
        }
        Ok(Self::from_membership(n, present))
    }

    fn from_membership(n: usize, present: Vec<bool>) -> Self {
        let edges = (0..n)
            .flat_map(|t| (0..n).map(move |h| (t, h)))
            .filter(|&(t, h)| present[t * n + h])
            .collect();
        Self { n, present, edges }
    }

    /// Every ordered pair `(i, j)`, `i != j`.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(
            n,
            (0..n).flat_map(|t| (0..n).filter(move |&h| h != t).map(move |h| (t, h))),
        )
    }

    /// Directed cycle `0 → 1 → … → n-1 → 0`.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, tail: usize, head: usize) -> bool {
        tail < self.n && head < self.n && self.present[tail * self.n + head]
    }

    pub fn in_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&t| self.has_edge(t, node))
    }

    pub fn out_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&h| self.has_edge(node, h))
    }

    /// Whether `S[i, j]` may be nonzero: the diagonal, or `j` is an
    /// in-neighbor of `i`.
    pub fn allows_shift_entry(&self, i: usize, j: usize) -> bool {
        i == j || self.has_edge(j, i)
    }

    /// Number of off-diagonal shift entries forced to zero.
    pub fn non_edge_count(&self) -> usize {
        self.n * (self.n - 1) - self.edges.len()
    }

    /// True iff every node reaches every other node along directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        let forward = self.reach_count(|v| self.out_neighbors(v).collect());
        forward == self.n && self.reach_count(|v| self.in_neighbors(v).collect()) == self.n
    }

    fn reach_count(&self, next: impl Fn(usize) -> Vec<usize>) -> usize {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in next(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count
    }

    /// `A[i, j] = 1` iff `j` is an in-neighbor of `i`.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if self.has_edge(j, i) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// In-degree Laplacian `D_in − A`; every row sums to zero.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency_matrix();
        for i in 0..self.n {
            l[(i, i)] = self.in_neighbors(i).count() as f64;
        }
        l
    }

    /// Directed Erdős–Rényi graph conditioned on strong connectivity.
    ///
    /// Each draw visits ordered pairs tail-major (`tail` outer, `head` inner,
    /// skipping `tail == head`) and keeps the pair when a uniform `[0, 1)`
    /// sample falls below `p_edge`. Disconnected draws are discarded and the
    /// stream continues, up to [`CONNECTIVITY_RETRY_BUDGET`] draws.
    pub fn generate_erdos_renyi(n: usize, p_edge: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "need at least 2 nodes"));
        }
        if !(p_edge > 0.0 && p_edge <= 1.0) {
            return Err(Error::invalid("p_edge", "must lie in (0, 1]"));
        }
        let mut rng = rng_from_seed(seed);
        for _ in 0..CONNECTIVITY_RETRY_BUDGET {
            let mut present = vec![false; n * n];
            for t in 0..n {
                for h in 0..n {
                    if t != h {
                        let u: f64 = rng.random();
                        present[t * n + h] = u < p_edge;
                    }
                }
            }
            let g = Self::from_membership(n, present);
            if g.is_strongly_connected() {
                return Ok(g);
            }
        }
        Err(Error::ConnectivityNotReached {
            n,
            p_edge,
            attempts: CONNECTIVITY_RETRY_BUDGET,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn strong_connectivity_cases() {
        assert!(DirectedGraph::cycle(4).unwrap().is_strongly_connected());
        assert!(DirectedGraph::complete(5).unwrap().is_strongly_connected());
        let one_way = DirectedGraph::new(2, [(0, 1)]).unwrap();
        assert!(!one_way.is_strongly_connected());
    }

    #[test]
    fn complete_digraph_from_generator() {
        let g = DirectedGraph::generate_erdos_renyi(4, 1.0, 0).unwrap();
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g, DirectedGraph::complete(4).unwrap());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            DirectedGraph::new(3, [(0, 3)]),
            Err(Error::EdgeOutOfRange {
                tail: 0,
                head: 3,
                n: 3
            })
        );
        assert_eq!(DirectedGraph::new(3, [(1, 1)]), Err(Error::SelfLoop(1)));
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let g = DirectedGraph::new(3, [(0, 1), (0, 1), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn three_cycle_matrices() {
        let g = DirectedGraph::cycle(3).unwrap();
        let a = g.adjacency_matrix();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
        assert_eq!(a, expected);
        let l = g.laplacian_matrix();
        assert_eq!(l, DMatrix::identity(3, 3) - expected);
    }

    #[test]
    fn complete_three_matrices() {
        let g = DirectedGraph::complete(3).unwrap();
        let ones = DMatrix::from_element(3, 3, 1.0);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(g.adjacency_matrix(), &ones - &id);
        assert_eq!(g.laplacian_matrix(), 2.0 * &id - (ones - id));
    }

    #[test]
    fn er_rejects_bad_parameters() {
        assert!(DirectedGraph::generate_erdos_renyi(1, 0.5, 0).is_err());
        assert!(DirectedGraph::generate_erdos_renyi(4, 0.0, 0).is_err());
        assert!(DirectedGraph::generate_erdos_renyi(4, 1.5, 0).is_err());
    }

    #[test]
    fn er_reports_exhausted_budget() {
        let err = DirectedGraph::generate_erdos_renyi(30, 0.001, 1).unwrap_err();
        assert!(matches!(err, Error::ConnectivityNotReached { n: 30, .. }));
    }

    // Replays the ChaCha stream pair by pair, independently of the generator.
    fn replay_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = rng_from_seed(seed);
        loop {
            let mut edges = Vec::new();
            for t in 0..n {
                for h in 0..n {
                    if t == h {
                        continue;
                    }
                    let u: f64 = rng.random();
                    if u < p {
                        edges.push((t, h));
                    }
                }
            }
            let g = DirectedGraph::new(n, edges.iter().copied()).unwrap();
            if g.is_strongly_connected() {
                return edges;
            }
        }
    }

    /// Golden edge set for (n = 5, p = 0.5, seed = 2024).
    pub(crate) const GOLDEN_N5_EDGES: &[(usize, usize)] = &[
        (0, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (2, 0),
        (3, 1),
        (3, 4),
        (4, 1),
    ];

    #[test]
    fn golden_fixture_n5() {
        let g = DirectedGraph::generate_erdos_renyi(5, 0.5, 2024).unwrap();
        assert_eq!(replay_edges(5, 0.5, 2024), g.edges());
        assert_eq!(g.edges(), GOLDEN_N5_EDGES);
    }

    #[test]
    fn golden_fixture_matrices() {
        let g = DirectedGraph::new(5, GOLDEN_N5_EDGES.iter().copied()).unwrap();
        let a = g.adjacency_matrix();
        let l = g.laplacian_matrix();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if GOLDEN_N5_EDGES.contains(&(j, i)) { 1.0 } else { 0.0 };
                assert_eq!(a[(i, j)], expect);
            }
            assert_eq!(l.row(i).sum(), 0.0);
        }
    }
}
