//! Independent oracles shared by the integration tests. None of these call
//! into the solver paths they check.

#![allow(dead_code)]

use shiftproj_core::{DMatrix, DVector, DirectedGraph, SubspaceBasis};

/// Optimum of the design program written over the free entries directly:
/// `x = [d (n); q (strict upper, column-major)]`, equality rows for every
/// forbidden `S[i, j]` plus the trace row, solved through its KKT system.
pub struct QpOptimum {
    pub d: DVector<f64>,
    pub q: DMatrix<f64>,
    pub objective: f64,
}

pub fn qp_oracle(g: &DirectedGraph, w: &DMatrix<f64>, r: usize, eps: f64) -> QpOptimum {
    let n = g.node_count();
    let upper: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    let nv = n + upper.len();
    let forbidden: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|&(i, j)| i != j && !g.has_edge(j, i))
        .collect();
    let m = forbidden.len() + 1;
    let mut a = DMatrix::zeros(m, nv);
    for (row, &(i, j)) in forbidden.iter().enumerate() {
        for k in 0..n {
            a[(row, k)] = w[(i, k)] * w[(j, k)];
        }
        for (k, &(p, s)) in upper.iter().enumerate() {
            a[(row, n + k)] = w[(i, p)] * w[(j, s)];
        }
    }
    for k in 0..r {
        a[(m - 1, k)] = 1.0;
    }
    let mut rhs = DVector::zeros(nv + m);
    rhs[nv + m - 1] = r as f64 * eps;

    let mut kkt = DMatrix::zeros(nv + m, nv + m);
    for k in r..nv {
        kkt[(k, k)] = 2.0;
    }
    kkt.view_mut((0, nv), (nv, m)).copy_from(&a.transpose());
    kkt.view_mut((nv, 0), (m, nv)).copy_from(&a);
    let svd = kkt.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let sol = svd.solve(&rhs, cutoff).unwrap();

    let d = sol.rows(0, n).into_owned();
    let mut q = DMatrix::zeros(n, n);
    for (k, &(i, j)) in upper.iter().enumerate() {
        q[(i, j)] = sol[n + k];
    }
    let objective = q.norm_squared() + d.rows_range(r..).norm_squared();
    QpOptimum { d, q, objective }
}

/// Row rank by Gaussian elimination with partial pivoting; pivots below
/// `tol · max|a|` count as zero.
pub fn gauss_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let scale = m.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, val) = (rank..rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((rank, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if val <= tol * scale {
            continue;
        }
        m.swap_rows(rank, piv);
        for i in rank + 1..rows {
            let f = m[(i, c)] / m[(rank, c)];
            for k in c..cols {
                let v = m[(rank, k)];
                m[(i, k)] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

/// Least squares by the normal equations `AᵀA x = Aᵀb` (full column rank),
/// with one refinement step on the residual.
pub fn normal_equations(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let lu = (a.transpose() * a).lu();
    let x0 = lu.solve(&(a.transpose() * b)).expect("full column rank");
    let resid = b - a * &x0;
    x0 + lu.solve(&(a.transpose() * resid)).expect("full column rank")
}

/// Dense `Sˡ` by repeated multiplication starting from `S`.
pub fn dense_power(s: &DMatrix<f64>, l: usize) -> DMatrix<f64> {
    let n = s.nrows();
    let mut out = DMatrix::identity(n, n);
    for _ in 0..l {
        out = s * out;
    }
    out
}

/// Forward and backward DFS reachability from node 0.
pub fn dfs_strongly_connected(g: &DirectedGraph) -> bool {
    let n = g.node_count();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                let e = if forward { g.has_edge(v, u) } else { g.has_edge(u, v) };
                if e && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

pub fn max_non_edge(g: &DirectedGraph, s: &DMatrix<f64>) -> f64 {
    let n = g.node_count();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && !g.has_edge(j, i) {
                worst = worst.max(s[(i, j)].abs());
            }
        }
    }
    worst
}

pub fn w_of(basis: &SubspaceBasis) -> DMatrix<f64> {
    let n = basis.n();
    let mut w = DMatrix::zeros(n, n);
    w.columns_mut(0, basis.r()).copy_from(basis.u_par());
    w.columns_mut(basis.r(), n - basis.r()).copy_from(basis.u_perp());
    w
}
