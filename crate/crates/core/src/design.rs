//! End-to-end shift design: basis choice, constraint assembly, ADMM,
//! structural projection, feasibility checks and the `ε` retry loop.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::admm::{AdmmSolver, PrimalResiduals};
use crate::constraints::ConstraintSet;
use crate::feasibility::{build_t_prime, check_eigen_separation};
use crate::filter::{fit_shared_from_powers, shift_powers};
use crate::graph::DirectedGraph;
use crate::rng::rng_from_seed;
use crate::subspace::SubspaceBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    /// Target mean of the signal-block eigenvalues, `tr(D₁) = rε`.
    pub epsilon: f64,
    pub rho: f64,
    pub i_max: usize,
    /// Early stop once every primal residual ∞-norm is at most this.
    pub residual_tol: f64,
    /// Relative eigenvalue-separation tolerance.
    pub sep_tol: f64,
    /// Relative singular-value cutoff for the `T′` rank.
    pub rank_tol: f64,
    /// Re-solves with a perturbed `ε` after a failed feasibility check.
    pub max_eps_retries: usize,
    /// Seeds the `ε` perturbation stream.
    pub retry_seed: u64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            rho: 0.1,
            i_max: 1000,
            residual_tol: 1e-8,
            sep_tol: 1e-6,
            rank_tol: 1e-10,
            max_eps_retries: 2,
            retry_seed: 0,
        }
    }
}

/// Upper bound on `max_eps_retries`.
pub const MAX_EPS_RETRIES: usize = 10;

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon != 0.0) {
            return Err(Error::invalid("epsilon", "must be finite and nonzero"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::invalid("rho", "must be positive"));
        }
        if self.i_max == 0 {
            return Err(Error::invalid("i_max", "must be at least 1"));
        }
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("sep_tol", self.sep_tol),
            ("rank_tol", self.rank_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "tolerance must be positive"));
            }
        }
        if self.max_eps_retries > MAX_EPS_RETRIES {
            return Err(Error::invalid("max_eps_retries", "at most 10"));
        }
        Ok(())
    }
}

/// `S = W (diag(d) + q) Wᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurFactors {
    pub w: DMatrix<f64>,
    pub d: DVector<f64>,
    /// Strictly upper triangular.
    pub q: DMatrix<f64>,
}

impl SchurFactors {
    pub fn shift(&self) -> DMatrix<f64> {
        let mut z = self.q.clone();
        for (i, &di) in self.d.iter().enumerate() {
            z[(i, i)] += di;
        }
        &self.w * z * self.w.transpose()
    }

    /// `‖Q‖_F² + Σ_{i ≥ r} d[i]²`.
    pub fn objective(&self, r: usize) -> f64 {
        self.q.norm_squared() + self.d.rows_range(r..).norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignDiagnostics {
    pub objective: f64,
    /// Largest `|S[i, j]|` over forbidden entries.
    pub topo_residual: f64,
    /// `|Σ_{i<r} d[i] − rε|`.
    pub trace_residual: f64,
    /// Largest entry discarded by [`project_structure`].
    pub structure_residual: f64,
    /// ADMM residuals at the last iteration.
    pub admm_residuals: PrimalResiduals,
    pub sep_margin: f64,
    pub sep_passed: bool,
    pub tprime_full_rank: bool,
    pub tprime_rank: usize,
    pub tprime_rows: usize,
    /// Shared-coefficient fit residual of `S` against `P` at order `N − 1`.
    pub poly_fit_residual: f64,
    pub epsilon_used: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Solves run, including the first.
    pub attempts: usize,
    /// No attempt passed both feasibility checks.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub shift: DMatrix<f64>,
    pub factors: SchurFactors,
    pub diagnostics: DesignDiagnostics,
    pub residual_history: Vec<PrimalResiduals>,
}

/// `W = [U∥ U⊥]`.
pub fn choose_w(basis: &SubspaceBasis) -> DMatrix<f64> {
    let (n, r) = (basis.n(), basis.r());
    let mut w = DMatrix::zeros(n, n);
    w.columns_mut(0, r).copy_from(basis.u_par());
    w.columns_mut(r, n - r).copy_from(basis.u_perp());
    w
}

/// Keeps the diagonal of `d_mat` and the strict upper triangle of `q_mat`;
/// returns the largest discarded magnitude alongside.
pub fn project_structure(d_mat: &DMatrix<f64>, q_mat: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>, f64) {
    let n = d_mat.nrows();
    let d = d_mat.diagonal();
    let mut q = DMatrix::zeros(n, n);
    let mut dropped: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i < j {
                q[(i, j)] = q_mat[(i, j)];
            } else {
                dropped = dropped.max(q_mat[(i, j)].abs());
            }
            if i != j {
                dropped = dropped.max(d_mat[(i, j)].abs());
            }
        }
    }
    (d, q, dropped)
}

fn attempt(
    solver: &AdmmSolver<'_>,
    g: &DirectedGraph,
    basis: &SubspaceBasis,
    w: &DMatrix<f64>,
    cfg: &DesignConfig,
    epsilon: f64,
) -> DesignResult {
    let cs = solver.constraints();
    let (n, r) = (basis.n(), basis.r());
    let out = solver.solve(&cs.rhs_for(epsilon), cfg.i_max, cfg.residual_tol);
    let (d, q, structure_residual) = project_structure(&out.d_mat, &out.q_mat);
    let factors = SchurFactors { w: w.clone(), d, q };
    let shift = factors.shift();

    let mut topo_residual: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if !g.allows_shift_entry(i, j) {
                topo_residual = topo_residual.max(shift[(i, j)].abs());
            }
        }
    }
    let trace_residual = (factors.d.rows(0, r).sum() - r as f64 * epsilon).abs();
    let sep = check_eigen_separation(&factors.d, r, cfg.sep_tol);
    let tp = build_t_prime(&factors.d, &factors.q, r, n - 1, cfg.rank_tol);
    let poly = fit_shared_from_powers(&shift_powers(&shift, n - 1), basis.proj());

    let diagnostics = DesignDiagnostics {
        objective: factors.objective(r),
        topo_residual,
        trace_residual,
        structure_residual,
        admm_residuals: out.final_residuals(),
        sep_margin: sep.margin,
        sep_passed: sep.passed,
        tprime_full_rank: tp.full_row_rank,
        tprime_rank: tp.rank,
        tprime_rows: tp.matrix.nrows(),
        poly_fit_residual: poly.fit_residual,
        epsilon_used: epsilon,
        iterations: out.iterations,
        converged: out.converged,
        attempts: 1,
        approximate: !(sep.passed && tp.full_row_rank),
    };
    DesignResult {
        shift,
        factors,
        diagnostics,
        residual_history: out.history,
    }
}

/// Designs a topology-constrained shift whose polynomials can reach the
/// projection onto `basis`.
///
/// When a solve fails the separation or `T′` rank check, `ε` is multiplied
/// by `2^u`, `u ~ U[−1, 1]` drawn from a stream seeded by `cfg.retry_seed`,
/// and the program is re-solved with the same factorizations. If every
/// attempt fails, the attempt with the smallest final ADMM residual is
/// returned with `approximate` set.
pub fn design_shift(g: &DirectedGraph, basis: &SubspaceBasis, cfg: &DesignConfig) -> Result<DesignResult> {
    cfg.validate()?;
    if basis.n() != g.node_count() {
        return Err(Error::DimensionMismatch {
            what: "basis rows vs graph nodes",
            expected: g.node_count(),
            found: basis.n(),
        });
    }
    if !g.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let w = choose_w(basis);
    let cs = ConstraintSet::assemble(g, &w, basis.r(), cfg.epsilon)?;
    let solver = AdmmSolver::new(&cs, cfg.rho)?;

    let mut retry_rng = rng_from_seed(cfg.retry_seed);
    let mut epsilon = cfg.epsilon;
    let mut best: Option<DesignResult> = None;
    for k in 0..=cfg.max_eps_retries {
        if k > 0 {
            let u: f64 = retry_rng.random_range(-1.0..=1.0);
            epsilon *= libm::exp2(u);
        }
        let mut res = attempt(&solver, g, basis, &w, cfg, epsilon);
        res.diagnostics.attempts = k + 1;
        if !res.diagnostics.approximate {
            return Ok(res);
        }
        let better = match &best {
            None => true,
            Some(b) => res.diagnostics.admm_residuals.max() < b.diagnostics.admm_residuals.max(),
        };
        if better {
            best = Some(res);
        }
    }
    let mut res = best.expect("at least one attempt runs");
    res.diagnostics.attempts = cfg.max_eps_retries + 1;
    Ok(res)
}
