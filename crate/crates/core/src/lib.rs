//! Design of asymmetric graph shift operators for decentralized subspace
//! projection.
//!
//! The crate covers the whole numerical pipeline:
//!
//! * [`graph`]: directed topologies, Erdős–Rényi generation, adjacency and
//!   Laplacian views.
//! * [`subspace`]: random signal subspaces, projections and the noisy
//!   observation model.
//! * [`constraints`]: the vectorized selector/constraint matrices of the
//!   Schur-structured design program.
//! * [`admm`] and [`design`]: the scaled ADMM solver and the end-to-end shift
//!   designer with feasibility checks ([`feasibility`]).
//! * [`filter`]: shared and per-node graph filter coefficient synthesis.
//! * [`baseline`]: adjacency, Laplacian and least-squares comparison shifts.
//! * [`metrics`]: exchange simulation, NMPE/NMSE and the Monte-Carlo
//!   experiment.
//!
//! Everything here is `no_std` + `alloc`; file formats, the CLI and the
//! parallel trial runner live in the companion `shiftproj` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod admm;
pub mod baseline;
pub mod constraints;
pub mod design;
pub mod feasibility;
pub mod filter;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod subspace;

mod error;

pub use error::{Error, Result};

pub use admm::{admm_solve, AdmmOutput, AdmmSolver, AdmmState, PrimalResiduals};
pub use baseline::{baseline_shift, ls_shift, BaselineKind, ShiftMethod};
pub use constraints::{ConstraintSet, Selector, StructureSelectors};
pub use design::{
    choose_w, design_shift, project_structure, DesignConfig, DesignDiagnostics, DesignResult,
    SchurFactors,
};
pub use feasibility::{build_t_prime, check_eigen_separation, Separation, TPrime};
pub use filter::{
    fit_coefficients_pernode, fit_coefficients_shared, minimal_order, Coefficients, FilterMode,
    GraphFilter,
};
pub use graph::DirectedGraph;
pub use metrics::{
    aggregate, monte_carlo_report, run_trial, simulate_exchanges, ExchangeTrajectory,
    ExperimentConfig, Metric, MetricCurve, MonteCarloReport, TrialOutcome,
};
pub use subspace::{generate_signal, SignalSample, SubspaceBasis};

pub use nalgebra::{DMatrix, DVector};
