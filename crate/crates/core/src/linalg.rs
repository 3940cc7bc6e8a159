//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Relative singular-value cutoff for the minimal-norm least-squares solves.
pub const PINV_RCOND: f64 = 1e-12;

/// Full QR factorization `a = Q R` with `Q` square orthogonal.
///
/// Signs are normalized so that the leading `min(rows, cols)` diagonal
/// entries of `R` are nonnegative; the first `cols` columns of `Q` therefore
/// do not depend on the Householder sign choices. Each remaining column of
/// `Q` is flipped so its largest-magnitude entry is positive.
pub fn full_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let qr = a.clone().qr();
    let mut qt = DMatrix::<f64>::identity(n, n);
    qr.q_tr_mul(&mut qt);
    let mut q = qt.transpose();
    let mut r = qr.r();
    for j in 0..r.nrows().min(r.ncols()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    for j in r.ncols().min(n)..n {
        let lead = q.column(j).iter().fold(0.0_f64, |m, &x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Minimal-norm least-squares solution of `a x ≈ b`.
///
/// Columns are scaled to unit norm before the SVD; singular values below
/// `rcond · σ_max` of the scaled matrix are treated as zero.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let cols = a.ncols();
    if cols == 0 {
        return DVector::zeros(0);
    }
    let scale: DVector<f64> = DVector::from_iterator(
        cols,
        a.column_iter().map(|c| {
            let nrm = c.norm();
            if nrm > 0.0 {
                nrm
            } else {
                1.0
            }
        }),
    );
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= scale[j];
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return DVector::zeros(cols);
    }
    let mut x = svd
        .solve(b, rcond * smax)
        .expect("both SVD factors were requested");
    x.component_div_assign(&scale);
    x
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Number of singular values above `rtol · σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = singular_values(a);
    if sv.is_empty() {
        return 0;
    }
    let cutoff = rtol * sv.max();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Cholesky factor of a symmetric positive definite matrix, rejecting
/// numerically singular input.
pub fn cholesky_spd(a: DMatrix<f64>, which: &'static str) -> Result<Cholesky<f64, Dyn>> {
    let max_diag = a.diagonal().amax();
    let chol = Cholesky::new(a).ok_or(Error::SingularSystem { which })?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if !(max_diag > 0.0) || min_pivot * min_pivot <= 1e-13 * max_diag {
        return Err(Error::SingularSystem { which });
    }
    Ok(chol)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Largest entry of `|aᵀa − I|`.
pub fn orthogonality_defect(a: &DMatrix<f64>) -> f64 {
    let g = a.transpose() * a;
    max_abs(&(g - DMatrix::identity(a.ncols(), a.ncols())))
}
