//! Selector and constraint matrices of the vectorized design program.
//!
//! `vec(·)` stacks columns: entry `(i, j)` of an `n × n` matrix lands at
//! index `j·n + i`, so `vec(A B C) = (Cᵀ ⊗ A) vec(B)`. All selectors enumerate
//! their entries in column-major scan order (column outer, row inner).
//!
//! The program's unknowns are `vec(D)` and `vec(Q)` with `S = W (D + Q) Wᵀ`:
//!
//! * topology: `M vec(D + Q) = 0`, `M = T (W ⊗ W)`, one row of `T` per
//!   forbidden off-diagonal entry of `S`;
//! * `C vec(D) = b` where `C = [trace_row; x_offdiag]`, pinning
//!   `tr(D₁) = rε` and every off-diagonal entry of `D` to zero;
//! * `R vec(Q) = 0` zeroing the lower triangle (with diagonal) of `Q`;
//! * the cost penalizes `‖Q‖_F²` and `‖F vec(D)‖²`, `F` picking the `N − r`
//!   trailing diagonal entries of `D`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::graph::DirectedGraph;
use crate::linalg::orthogonality_defect;
use crate::{Error, Result};

#[inline]
pub fn vec_index(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

/// Inverse of [`vec_index`].
#[inline]
pub fn unvec_index(n: usize, k: usize) -> (usize, usize) {
    (k % n, k / n)
}

pub fn vectorize(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// 0/1 matrix with exactly one unit entry per row, stored as the picked
/// column index of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    cols: usize,
    picks: Vec<usize>,
}

impl Selector {
    pub fn new(cols: usize, picks: Vec<usize>) -> Self {
        debug_assert!(picks.iter().all(|&p| p < cols));
        Self { cols, picks }
    }

    pub fn rows(&self) -> usize {
        self.picks.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn picks(&self) -> &[usize] {
        &self.picks
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows(), self.picks.iter().map(|&p| x[p]))
    }

    /// `Selᵀ v`: places `v` back at the picked positions, zeros elsewhere.
    pub fn scatter(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.cols);
        for (k, &p) in self.picks.iter().enumerate() {
            out[p] += v[k];
        }
        out
    }

    /// Diagonal of `Selᵀ Sel`.
    pub fn gram_diagonal(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.cols);
        for &p in &self.picks {
            d[p] += 1.0;
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols);
        for (k, &p) in self.picks.iter().enumerate() {
            m[(k, p)] = 1.0;
        }
        m
    }
}

/// One row per ordered pair `(i, j)`, `i != j`, where `j` is not an
/// in-neighbor of `i`; the row extracts `S[i, j]` from `vec(S)`.
pub fn build_topology_selector(g: &DirectedGraph) -> Selector {
    let n = g.node_count();
    let picks = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|&(i, j)| !g.allows_shift_entry(i, j))
        .map(|(i, j)| vec_index(n, i, j))
        .collect();
    Selector::new(n * n, picks)
}

/// Dense `M = T (W ⊗ W)`. Row `k` belongs to the forbidden entry `(i, j)`
/// and holds `W[i, a]·W[j, b]` at column `vec_index(a, b)`.
pub fn build_m(t_topo: &Selector, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut m = DMatrix::zeros(t_topo.rows(), n * n);
    for (k, &p) in t_topo.picks().iter().enumerate() {
        let (i, j) = unvec_index(n, p);
        for b in 0..n {
            let wjb = w[(j, b)];
            for a in 0..n {
                m[(k, vec_index(n, a, b))] = w[(i, a)] * wjb;
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSelectors {
    /// Trailing `N − r` diagonal entries of `D`.
    pub f: Selector,
    /// All `N² − N` off-diagonal entries of `D`.
    pub x_offdiag: Selector,
    /// Sums the leading `r` diagonal entries of `D`.
    pub trace_row: RowDVector<f64>,
    /// Lower triangle including the diagonal of `Q`, `(N² + N)/2` rows.
    pub r_lower: Selector,
}

pub fn build_structure_selectors(n: usize, r: usize) -> Result<StructureSelectors> {
    if r == 0 || r >= n {
        return Err(Error::invalid("r", "subspace dimension must satisfy 1 <= r < n"));
    }
    let nn = n * n;
    let f = Selector::new(nn, (r..n).map(|i| vec_index(n, i, i)).collect());
    let x_offdiag = Selector::new(
        nn,
        (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| vec_index(n, i, j)))
            .collect(),
    );
    let mut trace_row = RowDVector::zeros(nn);
    for i in 0..r {
        trace_row[vec_index(n, i, i)] = 1.0;
    }
    let r_lower = Selector::new(
        nn,
        (0..n)
            .flat_map(|j| (j..n).map(move |i| vec_index(n, i, j)))
            .collect(),
    );
    Ok(StructureSelectors {
        f,
        x_offdiag,
        trace_row,
        r_lower,
    })
}

/// Every matrix of the vectorized program for one graph, basis and `ε`.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    n: usize,
    r: usize,
    epsilon: f64,
    w: DMatrix<f64>,
    pub t_topo: Selector,
    pub m: DMatrix<f64>,
    pub f: Selector,
    pub x_offdiag: Selector,
    pub trace_row: RowDVector<f64>,
    pub r_lower: Selector,
    /// Right-hand side of `C vec(D) = b`: `[rε; 0; …; 0]`.
    pub b: DVector<f64>,
    // Allowed (diagonal or edge) positions; complement of `t_topo`.
    allowed: Vec<usize>,
}

impl ConstraintSet {
    pub fn assemble(g: &DirectedGraph, w: &DMatrix<f64>, r: usize, epsilon: f64) -> Result<Self> {
        let n = g.node_count();
        if w.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "W rows",
                expected: n,
                found: w.nrows(),
            });
        }
        if orthogonality_defect(w) > 1e-10 {
            return Err(Error::invalid("w", "W must be orthogonal to 1e-10"));
        }
        if !(epsilon.is_finite() && epsilon != 0.0) {
            return Err(Error::invalid("epsilon", "must be finite and nonzero"));
        }
        let sel = build_structure_selectors(n, r)?;
        let t_topo = build_topology_selector(g);
        let m = build_m(&t_topo, w);
        let allowed = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .filter(|&(i, j)| g.allows_shift_entry(i, j))
            .map(|(i, j)| vec_index(n, i, j))
            .collect();
        let b = Self::rhs(n, r, epsilon);
        Ok(Self {
            n,
            r,
            epsilon,
            w: w.clone(),
            t_topo,
            m,
            f: sel.f,
            x_offdiag: sel.x_offdiag,
            trace_row: sel.trace_row,
            r_lower: sel.r_lower,
            b,
            allowed,
        })
    }

    fn rhs(n: usize, r: usize, epsilon: f64) -> DVector<f64> {
        let mut b = DVector::zeros(1 + n * n - n);
        b[0] = r as f64 * epsilon;
        b
    }

    /// `b` for another trace parameter; every other matrix is unchanged.
    pub fn rhs_for(&self, epsilon: f64) -> DVector<f64> {
        Self::rhs(self.n, self.r, epsilon)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn c_rows(&self) -> usize {
        1 + self.x_offdiag.rows()
    }

    /// `M x` through `W X Wᵀ`, `O(N³)` instead of a dense `O(k N²)` product.
    pub fn apply_m(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = &self.w * unvectorize(x, self.n) * self.w.transpose();
        self.t_topo.apply(&vectorize(&y))
    }

    /// `Mᵀ v = vec(Wᵀ V W)` with `V` holding `v` at the forbidden entries.
    pub fn apply_mt(&self, v: &DVector<f64>) -> DVector<f64> {
        let scattered = unvectorize(&self.t_topo.scatter(v), self.n);
        vectorize(&(self.w.transpose() * scattered * &self.w))
    }

    /// `Mᵀ M`. When forbidden entries outnumber allowed ones this uses
    /// `I − GᵀG`, `G` the allowed rows of the orthogonal `W ⊗ W`.
    pub fn m_gram(&self) -> DMatrix<f64> {
        let nn = self.n * self.n;
        if self.t_topo.rows() <= self.allowed.len() {
            return self.m.transpose() * &self.m;
        }
        let allowed = Selector::new(nn, self.allowed.clone());
        let g = build_m(&allowed, &self.w);
        DMatrix::identity(nn, nn) - g.transpose() * g
    }

    /// `C d = [trace_row·d; x_offdiag·d]`.
    pub fn apply_c(&self, d: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.c_rows());
        out[0] = self.trace_row.dot(&d.transpose());
        out.rows_mut(1, self.x_offdiag.rows())
            .copy_from(&self.x_offdiag.apply(d));
        out
    }

    pub fn apply_ct(&self, v: &DVector<f64>) -> DVector<f64> {
        let tail = v.rows(1, self.x_offdiag.rows()).into_owned();
        let mut out = self.x_offdiag.scatter(&tail);
        out += self.trace_row.transpose() * v[0];
        out
    }

    /// `Cᵀ C`.
    pub fn c_gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::from_diagonal(&self.x_offdiag.gram_diagonal());
        g += self.trace_row.transpose() * &self.trace_row;
        g
    }

    /// Dense `C` (tests and oracles).
    pub fn c_dense(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.c_rows(), self.n * self.n);
        c.row_mut(0).copy_from(&self.trace_row);
        c.rows_mut(1, self.x_offdiag.rows())
            .copy_from(&self.x_offdiag.to_dense());
        c
    }
}
