mod common;

use common::{max_non_edge, qp_oracle, w_of};
use shiftproj_core::admm::{AdmmSolver, AdmmState};
use shiftproj_core::constraints::{vectorize, ConstraintSet};
use shiftproj_core::linalg::orthogonality_defect;
use shiftproj_core::rng::derive_seed;
use shiftproj_core::{
    admm_solve, design_shift, project_structure, DMatrix, DVector, DesignConfig, DirectedGraph,
    SubspaceBasis,
};

fn instance(k: u64) -> (DirectedGraph, SubspaceBasis) {
    let g = DirectedGraph::generate_erdos_renyi(4, 0.5, derive_seed(41, k, 0)).unwrap();
    let b = SubspaceBasis::random(4, 2, derive_seed(41, k, 1)).unwrap();
    (g, b)
}

fn long_run() -> DesignConfig {
    DesignConfig {
        rho: 1.0,
        i_max: 200_000,
        residual_tol: 1e-11,
        ..DesignConfig::default()
    }
}

#[test]
fn matches_kkt_oracle_when_run_to_convergence() {
    for k in 0..6 {
        let (g, b) = instance(k);
        let w = w_of(&b);
        let cs = ConstraintSet::assemble(&g, &w, 2, 1.0).unwrap();
        let out = admm_solve(&cs, &long_run()).unwrap();
        assert!(out.converged, "instance {k} stalled at {:?}", out.final_residuals());
        let (d, q, structure) = project_structure(&out.d_mat, &out.q_mat);
        assert!(structure <= 1e-6);
        let obj = q.norm_squared() + d.rows_range(2..).norm_squared();
        let oracle = qp_oracle(&g, &w, 2, 1.0);
        assert!(
            (obj - oracle.objective).abs() <= 1e-5,
            "instance {k}: admm {obj} vs oracle {}",
            oracle.objective
        );
        assert!((d - &oracle.d).amax() < 1e-4);
    }
}

#[test]
fn factorization_reuse_matches_fresh_solves() {
    let (g, b) = instance(2);
    let cs = ConstraintSet::assemble(&g, &w_of(&b), 2, 1.0).unwrap();
    let rho = 0.1;
    let solver = AdmmSolver::new(&cs, rho).unwrap();
    let mut st = AdmmState::zeros(&cs);

    // Dense system matrices assembled from the raw selectors.
    let nn = 16;
    let m = &cs.m;
    let c = cs.c_dense();
    let r = cs.r_lower.to_dense();
    let f = cs.f.to_dense();
    let a_q = m.transpose() * m * rho + DMatrix::identity(nn, nn) + r.transpose() * &r * rho;
    let a_d = m.transpose() * m * rho + c.transpose() * &c * rho + f.transpose() * &f;

    let mut d = DVector::zeros(nn);
    let mut q: DVector<f64>;
    let mut v1 = DVector::zeros(m.nrows());
    let mut v2 = DVector::zeros(c.nrows());
    let mut v3 = DVector::zeros(r.nrows());
    for _ in 0..25 {
        solver.step(&mut st, &cs.b);

        let rhs = (m.transpose() * (m * &d + &v1) + r.transpose() * &v3) * -rho;
        q = a_q.clone().lu().solve(&rhs).unwrap();
        let rhs = (m.transpose() * (m * &q + &v1) + c.transpose() * (&v2 - &cs.b)) * -rho;
        d = a_d.clone().lu().solve(&rhs).unwrap();
        v1 += m * (&d + &q);
        v2 += &c * &d - &cs.b;
        v3 += &r * &q;

        assert!((&st.q - &q).amax() < 1e-12);
        assert!((&st.d - &d).amax() < 1e-12);
        assert!((&st.v1 - &v1).amax() < 1e-12);
    }
}

#[test]
fn zero_satisfies_structural_constraints_without_trace_row() {
    let (g, b) = instance(0);
    let cs = ConstraintSet::assemble(&g, &w_of(&b), 2, 1.0).unwrap();
    let zero = DVector::zeros(16);
    assert_eq!(cs.apply_m(&zero).amax(), 0.0);
    let cz = cs.apply_c(&zero);
    assert_eq!(cz.rows(1, cz.len() - 1).amax(), 0.0);
    assert_eq!(cs.r_lower.apply(&zero).amax(), 0.0);
    // Only the trace row rules the trivial point out.
    assert_eq!((cz - &cs.b)[0], -2.0);
}

#[test]
fn design_result_invariants() {
    let cfg = long_run();
    for k in 0..4 {
        let (g, b) = instance(k);
        let res = design_shift(&g, &b, &cfg).unwrap();
        let f = &res.factors;
        assert!(orthogonality_defect(&f.w) <= 1e-10);
        for j in 0..4 {
            for i in j..4 {
                assert_eq!(f.q[(i, j)], 0.0);
            }
        }
        let z = &f.q + DMatrix::from_diagonal(&f.d);
        let rebuilt = &f.w * z * f.w.transpose();
        assert!((&rebuilt - &res.shift).norm() <= 1e-10 * res.shift.norm());
        let dg = &res.diagnostics;
        assert!((f.d.rows(0, 2).sum() - 2.0 * dg.epsilon_used).abs() <= 10.0 * cfg.residual_tol);
        let by_hand = f.q.iter().map(|x| x * x).sum::<f64>() + f.d[2] * f.d[2] + f.d[3] * f.d[3];
        assert!((dg.objective - by_hand).abs() <= 1e-15 * by_hand.max(1.0));
        assert_eq!(dg.topo_residual, max_non_edge(&g, &res.shift));
        assert!(dg.topo_residual <= 1e-6);
    }
}

#[test]
fn fig1_configuration_runs() {
    let g = DirectedGraph::generate_erdos_renyi(10, 0.5, 3).unwrap();
    let b = SubspaceBasis::random(10, 3, 3).unwrap();
    let res = design_shift(&g, &b, &DesignConfig::default()).unwrap();
    let dg = &res.diagnostics;
    assert!(dg.iterations <= 1000);
    assert_eq!(res.residual_history.len(), dg.iterations);
    assert!(dg.attempts >= 1 && dg.attempts <= 3);
    assert_eq!(vectorize(&res.shift).len(), 100);
}

#[test]
fn retries_are_deterministic() {
    let (g, b) = instance(1);
    let cfg = DesignConfig {
        retry_seed: 99,
        max_eps_retries: 3,
        ..DesignConfig::default()
    };
    let a = design_shift(&g, &b, &cfg).unwrap();
    let c = design_shift(&g, &b, &cfg).unwrap();
    assert_eq!(a, c);
    let e = a.diagnostics.epsilon_used;
    assert!(e == 1.0 || (0.5f64.powi(3)..=8.0).contains(&e));
}
