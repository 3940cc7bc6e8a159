//! A-posteriori polynomial-feasibility checks on a structured pair `(D, Q)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{max_abs, numerical_rank};

/// Gap between the eigenvalue blocks `d[..r]` and `d[r..]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// `min |d[i] − d[j]|` over `i < r <= j`.
    pub margin: f64,
    /// `sep_tol · max(1, max |d|)`.
    pub threshold: f64,
    pub passed: bool,
}

pub fn check_eigen_separation(d: &DVector<f64>, r: usize, sep_tol: f64) -> Separation {
    let mut margin = f64::INFINITY;
    for i in 0..r.min(d.len()) {
        for j in r..d.len() {
            margin = margin.min((d[i] - d[j]).abs());
        }
    }
    let threshold = sep_tol * d.amax().max(1.0);
    Separation {
        margin,
        threshold,
        passed: margin > threshold,
    }
}

/// Power basis of `Z = diag(d) + q` on its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TPrime {
    /// Retained rows; column `l` holds the retained entries of `Zˡ`.
    pub matrix: DMatrix<f64>,
    /// `(i, j)` position of every retained row.
    pub positions: Vec<(usize, usize)>,
    pub rank: usize,
    pub full_row_rank: bool,
}

/// Builds the `(L + 1)`-column matrix `[vec(Z⁰) | … | vec(Z^L)]` restricted
/// to positions `i <= j`, scanned column-major.
///
/// Rows that vanish for every power (below `rank_tol · max|T′|`) are
/// dropped, as is every diagonal row whose eigenvalue repeats an earlier one
/// inside the same block (`d[..r]` or `d[r..]`). Rank counts singular values
/// above `rank_tol · σ_max`.
pub fn build_t_prime(
    d: &DVector<f64>,
    q: &DMatrix<f64>,
    r: usize,
    order: usize,
    rank_tol: f64,
) -> TPrime {
    let n = d.len();
    let mut z = q.upper_triangle();
    z.fill_diagonal(0.0);
    z.set_diagonal(d);

    let mut powers = Vec::with_capacity(order + 1);
    powers.push(DMatrix::<f64>::identity(n, n));
    for l in 1..=order {
        let next = &z * &powers[l - 1];
        powers.push(next);
    }

    let upper: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .collect();
    let full = DMatrix::from_fn(upper.len(), order + 1, |k, l| {
        let (i, j) = upper[k];
        powers[l][(i, j)]
    });

    let scale = max_abs(&full);
    let dup_tol = rank_tol * d.amax().max(1.0);
    let same_block = |a: usize, b: usize| (a < r) == (b < r);
    let keep: Vec<usize> = (0..upper.len())
        .filter(|&k| full.row(k).amax() > rank_tol * scale)
        .filter(|&k| {
            let (i, j) = upper[k];
            i != j || !(0..i).any(|p| same_block(p, i) && (d[p] - d[i]).abs() <= dup_tol)
        })
        .collect();

    let matrix = full.select_rows(keep.iter());
    let positions = keep.iter().map(|&k| upper[k]).collect();
    let rank = numerical_rank(&matrix, rank_tol);
    TPrime {
        full_row_rank: rank == matrix.nrows(),
        matrix,
        positions,
        rank,
    }
}
