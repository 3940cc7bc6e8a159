//! Scaled-form ADMM for the Schur-structured design program.
//!
//! The two subproblems are unconstrained quadratics with closed-form
//! minimizers:
//!
//! ```text
//! q ← −(ρMᵀM + I + ρRᵀR)⁻¹ · ρ(Mᵀ(M d + v₁) + Rᵀv₃)
//! d ← −(ρMᵀM + ρCᵀC + FᵀF)⁻¹ · ρ(Mᵀ(M q + v₁) + Cᵀ(v₂ − b))
//! v₁ ← v₁ + M(d + q),  v₂ ← v₂ + C d − b,  v₃ ← v₃ + R q
//! ```
//!
//! Both system matrices depend only on the constraint set and `ρ`, so they
//! are Cholesky-factorized once per solver and reused for every iteration and
//! every right-hand side `b`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::constraints::{unvectorize, ConstraintSet};
use crate::design::DesignConfig;
use crate::linalg::cholesky_spd;
use crate::{Error, Result};

/// Primal variables and scaled duals.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub d: DVector<f64>,
    pub q: DVector<f64>,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
    pub v3: DVector<f64>,
}

impl AdmmState {
    pub fn zeros(cs: &ConstraintSet) -> Self {
        let nn = cs.n() * cs.n();
        Self {
            d: DVector::zeros(nn),
            q: DVector::zeros(nn),
            v1: DVector::zeros(cs.t_topo.rows()),
            v2: DVector::zeros(cs.c_rows()),
            v3: DVector::zeros(cs.r_lower.rows()),
        }
    }
}

/// ∞-norms of the constraint violations after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimalResiduals {
    /// `‖M vec(D + Q)‖∞`.
    pub topology: f64,
    /// `|tr(D₁) − rε|`.
    pub trace: f64,
    /// Largest off-diagonal `|D|` or lower-triangular `|Q|` entry.
    pub structure: f64,
}

impl PrimalResiduals {
    pub fn max(&self) -> f64 {
        self.topology.max(self.trace).max(self.structure)
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutput {
    /// Raw `D` iterate, before any structural projection.
    pub d_mat: DMatrix<f64>,
    /// Raw `Q` iterate.
    pub q_mat: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<PrimalResiduals>,
}

impl AdmmOutput {
    pub fn final_residuals(&self) -> PrimalResiduals {
        self.history.last().copied().unwrap_or_default()
    }
}

/// Factorized ADMM system for one constraint set and penalty.
pub struct AdmmSolver<'a> {
    cs: &'a ConstraintSet,
    rho: f64,
    chol_q: Cholesky<f64, Dyn>,
    chol_d: Cholesky<f64, Dyn>,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(cs: &'a ConstraintSet, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", "ADMM penalty must be positive"));
        }
        let mtm = cs.m_gram() * rho;

        let mut a_q = mtm.clone();
        let r_mask = cs.r_lower.gram_diagonal();
        for k in 0..a_q.nrows() {
            a_q[(k, k)] += 1.0 + rho * r_mask[k];
        }

        let mut a_d = mtm;
        a_d += cs.c_gram() * rho;
        for &k in cs.f.picks() {
            a_d[(k, k)] += 1.0;
        }

        Ok(Self {
            cs,
            rho,
            chol_q: cholesky_spd(a_q, "Q-update")?,
            chol_d: cholesky_spd(a_d, "D-update")?,
        })
    }

    pub fn constraints(&self) -> &ConstraintSet {
        self.cs
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// One full ADMM iteration against right-hand side `b`.
    pub fn step(&self, st: &mut AdmmState, b: &DVector<f64>) -> PrimalResiduals {
        let cs = self.cs;

        let mut rhs_q = cs.apply_mt(&(cs.apply_m(&st.d) + &st.v1));
        rhs_q += cs.r_lower.scatter(&st.v3);
        rhs_q *= -self.rho;
        st.q = self.chol_q.solve(&rhs_q);

        let mut rhs_d = cs.apply_mt(&(cs.apply_m(&st.q) + &st.v1));
        rhs_d += cs.apply_ct(&(&st.v2 - b));
        rhs_d *= -self.rho;
        st.d = self.chol_d.solve(&rhs_d);

        let r1 = cs.apply_m(&(&st.d + &st.q));
        let r2 = cs.apply_c(&st.d) - b;
        let r3 = cs.r_lower.apply(&st.q);
        st.v1 += &r1;
        st.v2 += &r2;
        st.v3 += &r3;

        let off_d = r2.rows(1, r2.len() - 1).amax();
        PrimalResiduals {
            topology: if r1.is_empty() { 0.0 } else { r1.amax() },
            trace: r2[0].abs(),
            structure: off_d.max(r3.amax()),
        }
    }

    /// Iterates from zero until every residual is at most `tol` or `i_max`
    /// iterations have run.
    pub fn solve(&self, b: &DVector<f64>, i_max: usize, tol: f64) -> AdmmOutput {
        let mut st = AdmmState::zeros(self.cs);
        let mut history = Vec::with_capacity(i_max);
        let mut converged = false;
        for _ in 0..i_max {
            let res = self.step(&mut st, b);
            history.push(res);
            if res.max() <= tol {
                converged = true;
                break;
            }
        }
        let n = self.cs.n();
        AdmmOutput {
            d_mat: unvectorize(&st.d, n),
            q_mat: unvectorize(&st.q, n),
            iterations: history.len(),
            converged,
            history,
        }
    }
}

/// Factorizes and solves with the constraint set's own `b`, using `ρ`,
/// `I_max` and the residual tolerance from `cfg`.
pub fn admm_solve(cs: &ConstraintSet, cfg: &DesignConfig) -> Result<AdmmOutput> {
    cfg.validate()?;
    Ok(AdmmSolver::new(cs, cfg.rho)?.solve(&cs.b, cfg.i_max, cfg.residual_tol))
}
