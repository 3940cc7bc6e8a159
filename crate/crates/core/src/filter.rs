//! Polynomial graph filters `H = Σ_l c_l Sˡ` and their coefficient fits.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{lstsq_min_norm, PINV_RCOND};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterMode {
    /// One coefficient vector used by every node.
    Shared,
    /// Node `n` applies its own row of coefficients.
    PerNode,
}

impl FilterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterMode::Shared => "shared",
            FilterMode::PerNode => "per-node",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(FilterMode::Shared),
            "per-node" | "pernode" => Ok(FilterMode::PerNode),
            other => Err(Error::invalid("mode", alloc::format!("unknown filter mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// Length `L + 1`.
    Shared(DVector<f64>),
    /// `N × (L + 1)`, row `n` for node `n`.
    PerNode(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFilter {
    pub order: usize,
    pub coefficients: Coefficients,
    /// Relative Frobenius error (shared) or largest relative row error
    /// (per-node) of the implied transform against the fitted target.
    pub fit_residual: f64,
}

impl GraphFilter {
    pub fn new(order: usize, coefficients: Coefficients, fit_residual: f64) -> Result<Self> {
        let cols = match &coefficients {
            Coefficients::Shared(c) => c.len(),
            Coefficients::PerNode(c) => c.ncols(),
        };
        if cols != order + 1 {
            return Err(Error::DimensionMismatch {
                what: "filter coefficients per node",
                expected: order + 1,
                found: cols,
            });
        }
        Ok(Self {
            order,
            coefficients,
            fit_residual,
        })
    }

    pub fn mode(&self) -> FilterMode {
        match self.coefficients {
            Coefficients::Shared(_) => FilterMode::Shared,
            Coefficients::PerNode(_) => FilterMode::PerNode,
        }
    }

    /// Coefficient `c_l` used by `node`.
    pub fn coefficient(&self, node: usize, l: usize) -> f64 {
        match &self.coefficients {
            Coefficients::Shared(c) => c[l],
            Coefficients::PerNode(c) => c[(node, l)],
        }
    }

    /// Dense `H` implied by the coefficients on shift `s`.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_shift(s)?;
        Ok(transform_from_powers(&shift_powers(s, self.order), &self.coefficients))
    }

    fn check_shift(&self, s: &DMatrix<f64>) -> Result<()> {
        if let Coefficients::PerNode(c) = &self.coefficients {
            if c.nrows() != s.nrows() {
                return Err(Error::DimensionMismatch {
                    what: "per-node filter rows vs shift size",
                    expected: s.nrows(),
                    found: c.nrows(),
                });
            }
        }
        Ok(())
    }
}

/// `[S⁰, S¹, …, S^order]`, each power one multiplication from the last.
pub fn shift_powers(s: &DMatrix<f64>, order: usize) -> Vec<DMatrix<f64>> {
    let n = s.nrows();
    let mut powers = Vec::with_capacity(order + 1);
    powers.push(DMatrix::identity(n, n));
    for l in 1..=order {
        let next = s * &powers[l - 1];
        powers.push(next);
    }
    powers
}

fn transform_from_powers(powers: &[DMatrix<f64>], coeffs: &Coefficients) -> DMatrix<f64> {
    let n = powers[0].nrows();
    let mut h = DMatrix::zeros(n, n);
    match coeffs {
        Coefficients::Shared(c) => {
            for (l, p) in powers.iter().enumerate().take(c.len()) {
                h += p * c[l];
            }
        }
        Coefficients::PerNode(c) => {
            for i in 0..n {
                for (l, p) in powers.iter().enumerate().take(c.ncols()) {
                    let w = c[(i, l)];
                    for j in 0..n {
                        h[(i, j)] += w * p[(i, j)];
                    }
                }
            }
        }
    }
    h
}

fn check_square_pair(s: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            what: "shift columns",
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    if p.shape() != s.shape() {
        return Err(Error::DimensionMismatch {
            what: "target size",
            expected: s.nrows(),
            found: p.nrows(),
        });
    }
    Ok(())
}

fn relative(err: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        err / reference
    } else {
        err
    }
}

/// Shared fit from precomputed powers `[S⁰, …, S^L]`.
pub fn fit_shared_from_powers(powers: &[DMatrix<f64>], p: &DMatrix<f64>) -> GraphFilter {
    let order = powers.len() - 1;
    let nn = p.len();
    let mut a = DMatrix::zeros(nn, order + 1);
    for (l, pw) in powers.iter().enumerate() {
        a.column_mut(l).copy_from_slice(pw.as_slice());
    }
    let target = DVector::from_column_slice(p.as_slice());
    let c = lstsq_min_norm(&a, &target, PINV_RCOND);
    let coefficients = Coefficients::Shared(c);
    let h = transform_from_powers(powers, &coefficients);
    GraphFilter {
        order,
        fit_residual: relative((h - p).norm(), p.norm()),
        coefficients,
    }
}

/// Per-node fit from precomputed powers.
pub fn fit_pernode_from_powers(powers: &[DMatrix<f64>], p: &DMatrix<f64>) -> GraphFilter {
    let order = powers.len() - 1;
    let n = p.nrows();
    let mut c = DMatrix::zeros(n, order + 1);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let a = DMatrix::from_fn(n, order + 1, |j, l| powers[l][(i, j)]);
        let target = p.row(i).transpose();
        let ci = lstsq_min_norm(&a, &target, PINV_RCOND);
        let err = (&a * &ci - &target).norm();
        worst = worst.max(relative(err, target.norm()));
        c.row_mut(i).copy_from(&ci.transpose());
    }
    GraphFilter {
        order,
        coefficients: Coefficients::PerNode(c),
        fit_residual: worst,
    }
}

/// Least-squares `c` for `Σ_l c_l Sˡ ≈ p` in Frobenius norm (minimal-norm on
/// rank deficiency).
pub fn fit_coefficients_shared(s: &DMatrix<f64>, p: &DMatrix<f64>, order: usize) -> Result<GraphFilter> {
    check_square_pair(s, p)?;
    Ok(fit_shared_from_powers(&shift_powers(s, order), p))
}

/// Row-by-row least squares: node `n` fits `Σ_l C[n, l] (Sˡ)[n, :] ≈ p[n, :]`.
pub fn fit_coefficients_pernode(s: &DMatrix<f64>, p: &DMatrix<f64>, order: usize) -> Result<GraphFilter> {
    check_square_pair(s, p)?;
    Ok(fit_pernode_from_powers(&shift_powers(s, order), p))
}

/// Smallest `L` in `0..N` whose fit residual is at most `tol`, with its
/// filter; `None` when no order up to `N − 1` fits.
pub fn minimal_order(
    s: &DMatrix<f64>,
    p: &DMatrix<f64>,
    tol: f64,
    mode: FilterMode,
) -> Result<Option<GraphFilter>> {
    check_square_pair(s, p)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let n = s.nrows();
    let powers = shift_powers(s, n - 1);
    for l in 0..n {
        let filter = match mode {
            FilterMode::Shared => fit_shared_from_powers(&powers[..=l], p),
            FilterMode::PerNode => fit_pernode_from_powers(&powers[..=l], p),
        };
        if filter.fit_residual <= tol {
            return Ok(Some(filter));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::SubspaceBasis;

    #[test]
    fn projection_as_shift_has_order_one() {
        let b = SubspaceBasis::random(6, 2, 1).unwrap();
        let p = b.proj().clone();
        let f = fit_coefficients_shared(&p, &p, 1).unwrap();
        let Coefficients::Shared(c) = &f.coefficients else { unreachable!() };
        assert!(c[0].abs() < 1e-10 && (c[1] - 1.0).abs() < 1e-10);
        assert!(f.fit_residual < 1e-12);

        let g = fit_coefficients_pernode(&p, &p, 1).unwrap();
        assert!(g.fit_residual < 1e-10);
        let Coefficients::PerNode(c) = &g.coefficients else { unreachable!() };
        for i in 0..6 {
            assert!(c[(i, 0)].abs() < 1e-8 && (c[(i, 1)] - 1.0).abs() < 1e-8);
        }
        let m = minimal_order(&p, &p, 1e-9, FilterMode::Shared).unwrap().unwrap();
        assert_eq!(m.order, 1);
    }

    #[test]
    fn identity_target_order_zero() {
        let s = DMatrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64);
        let id = DMatrix::identity(4, 4);
        let f = fit_coefficients_shared(&s, &id, 0).unwrap();
        assert!(f.fit_residual < 1e-15);
        let Coefficients::Shared(c) = &f.coefficients else { unreachable!() };
        assert!((c[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_invariant_subspace_never_fits() {
        // Symmetric S with a generic eigenbasis unrelated to range(P).
        let b = SubspaceBasis::random(6, 2, 4).unwrap();
        let mut rng = crate::rng::rng_from_seed(17);
        let a = crate::rng::standard_normal_matrix(&mut rng, 6, 6);
        let s = &a + a.transpose();
        assert!(minimal_order(&s, b.proj(), 1e-6, FilterMode::Shared).unwrap().is_none());
    }

    #[test]
    fn transform_matches_fit_and_rejects_bad_rows() {
        let b = SubspaceBasis::random(5, 2, 2).unwrap();
        let mut rng = crate::rng::rng_from_seed(3);
        let s = crate::rng::standard_normal_matrix(&mut rng, 5, 5);
        let f = fit_coefficients_pernode(&s, b.proj(), 3).unwrap();
        let h = f.transform(&s).unwrap();
        let rel = (0..5)
            .map(|i| (h.row(i) - b.proj().row(i)).norm() / b.proj().row(i).norm())
            .fold(0.0, f64::max);
        assert!((rel - f.fit_residual).abs() < 1e-12);
        assert!(f.transform(&DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn constructor_checks_length() {
        assert!(GraphFilter::new(2, Coefficients::Shared(DVector::zeros(2)), 0.0).is_err());
        assert!(GraphFilter::new(1, Coefficients::Shared(DVector::zeros(2)), 0.0).is_ok());
    }

    #[test]
    fn mode_labels_round_trip() {
        for m in [FilterMode::Shared, FilterMode::PerNode] {
            assert_eq!(m.as_str().parse::<FilterMode>().unwrap(), m);
        }
    }
}
