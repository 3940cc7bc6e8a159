//! Exchange simulation, NMPE/NMSE curves and the Monte-Carlo experiment.
//!
//! For an exchange budget `l` every method gets its best order-`l` per-node
//! filter, fitted under the signal covariance `Σ = β²(N/r)P + I`, so that
//! row `n` minimizes `E|(P − H)[n, :] z|²`. A row is only replaced when the
//! new fit lowers that error, which makes every curve non-increasing in `l`
//! and bounded by the zero filter at `l = 0`.
//!
//! NMPE uses the exact inner expectation `tr((P − H) Σ (P − H)ᵀ) / tr(PΣP)`.
//! NMSE samples `signal_draws` observations per trial, shared by all
//! methods. Both aggregate as a ratio of sums over included trials.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::baseline::{baseline_shift, ls_shift, BaselineKind, ShiftMethod};
use crate::design::{design_shift, DesignConfig, DesignDiagnostics};
use crate::filter::{shift_powers, GraphFilter};
use crate::graph::DirectedGraph;
use crate::linalg::{lstsq_min_norm, PINV_RCOND};
use crate::rng::{derive_seed, rng_from_seed};
use crate::subspace::{generate_signal_with, SubspaceBasis};
use crate::{Error, Result};

/// Seed purposes for [`derive_seed`].
pub const SEED_GRAPH: u64 = 0;
pub const SEED_BASIS: u64 = 1;
pub const SEED_SIGNALS: u64 = 2;
pub const SEED_RETRY: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Nmpe,
    Nmse,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Nmpe => "nmpe",
            Metric::Nmse => "nmse",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmpe" => Ok(Metric::Nmpe),
            "nmse" => Ok(Metric::Nmse),
            other => Err(Error::invalid("metric", alloc::format!("unknown metric `{other}`"))),
        }
    }
}

/// States `y⁽⁰⁾ … y⁽ᴸ⁾` of the exchange protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeTrajectory {
    pub states: Vec<DVector<f64>>,
    /// Messages sent up to and including each exchange; entry 0 is 0.
    pub messages_sent: Vec<usize>,
}

impl ExchangeTrajectory {
    /// Node `node`'s own state sequence.
    pub fn local_view(&self, node: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[node]).collect()
    }

    /// Each node combines its local view with its filter coefficients.
    pub fn estimate(&self, filter: &GraphFilter) -> Result<DVector<f64>> {
        if filter.order + 1 > self.states.len() {
            return Err(Error::DimensionMismatch {
                what: "exchanges available for filter order",
                expected: filter.order,
                found: self.states.len() - 1,
            });
        }
        let n = self.states[0].len();
        if let crate::filter::Coefficients::PerNode(c) = &filter.coefficients {
            if c.nrows() != n {
                return Err(Error::DimensionMismatch {
                    what: "per-node filter rows vs signal length",
                    expected: n,
                    found: c.nrows(),
                });
            }
        }
        Ok(DVector::from_fn(n, |i, _| {
            (0..=filter.order)
                .map(|l| filter.coefficient(i, l) * self.states[l][i])
                .sum()
        }))
    }
}

/// Runs `exchanges` rounds of `y ← S y` from `z` over graph `g`; each
/// round every node sends its state along each out-edge.
pub fn simulate_exchanges(
    g: &DirectedGraph,
    s: &DMatrix<f64>,
    z: &DVector<f64>,
    exchanges: usize,
) -> Result<ExchangeTrajectory> {
    let n = g.node_count();
    if s.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "shift size vs graph nodes",
            expected: n,
            found: s.nrows(),
        });
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            what: "signal length",
            expected: n,
            found: z.len(),
        });
    }
    let mut states = Vec::with_capacity(exchanges + 1);
    states.push(z.clone());
    for l in 1..=exchanges {
        let next = s * &states[l - 1];
        states.push(next);
    }
    let messages_sent = (0..=exchanges).map(|l| l * g.edge_count()).collect();
    Ok(ExchangeTrajectory {
        states,
        messages_sent,
    })
}

/// `Σ^{1/2} = I + (√(1 + β²N/r) − 1) P`.
pub fn signal_covariance_sqrt(basis: &SubspaceBasis, beta: f64) -> DMatrix<f64> {
    let (n, r) = (basis.n() as f64, basis.r() as f64);
    let a = libm::sqrt(1.0 + beta * beta * n / r) - 1.0;
    DMatrix::identity(basis.n(), basis.n()) + basis.proj() * a
}

/// `H_0 … H_{l_max}` of the covariance-weighted per-node fits with the
/// nesting guard, plus each budget's `tr((P − H_l) Σ (P − H_l)ᵀ)`.
pub fn nested_pernode_transforms(
    s: &DMatrix<f64>,
    p: &DMatrix<f64>,
    sigma_half: &DMatrix<f64>,
    l_max: usize,
) -> (Vec<DMatrix<f64>>, Vec<f64>) {
    let n = s.nrows();
    let powers = shift_powers(s, l_max);
    let mut h = DMatrix::zeros(n, n);
    // Weighted squared error of each row of the current H.
    let mut row_err: Vec<f64> = (0..n)
        .map(|i| (sigma_half * p.row(i).transpose()).norm_squared())
        .collect();
    let mut transforms = Vec::with_capacity(l_max + 1);
    let mut errors = Vec::with_capacity(l_max + 1);

    let targets: Vec<DVector<f64>> = (0..n).map(|i| sigma_half * p.row(i).transpose()).collect();
    let raw: Vec<DMatrix<f64>> = (0..n)
        .map(|i| DMatrix::from_fn(n, l_max + 1, |j, l| powers[l][(i, j)]))
        .collect();
    let weighted: Vec<DMatrix<f64>> = raw.iter().map(|k| sigma_half * k).collect();

    for l in 0..=l_max {
        for i in 0..n {
            let a = weighted[i].columns(0, l + 1).into_owned();
            let c = lstsq_min_norm(&a, &targets[i], PINV_RCOND);
            let err = (&a * &c - &targets[i]).norm_squared();
            if err < row_err[i] {
                row_err[i] = err;
                let row = raw[i].columns(0, l + 1) * c;
                h.row_mut(i).copy_from(&row.transpose());
            }
        }
        transforms.push(h.clone());
        errors.push(row_err.iter().sum());
    }
    (transforms, errors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub r: usize,
    pub p_edge: f64,
    pub beta: f64,
    /// Largest exchange budget on the curves.
    pub l_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Sampled observations per trial for NMSE.
    pub signal_draws: usize,
    pub design: DesignConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::fig1()
    }
}

impl ExperimentConfig {
    /// Ten-node networks, `r = 3`, `β = 5`, edge probability 0.5.
    pub fn fig1() -> Self {
        Self {
            n: 10,
            r: 3,
            p_edge: 0.5,
            beta: 5.0,
            l_max: 9,
            trials: 100,
            seed: 0,
            signal_draws: 50,
            design: DesignConfig::default(),
        }
    }

    /// Forty-node networks, `r = 4`, `β = 5`, edge probability 0.3.
    pub fn fig2() -> Self {
        Self {
            n: 40,
            r: 4,
            p_edge: 0.3,
            l_max: 39,
            ..Self::fig1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", "need at least 2 nodes"));
        }
        if self.r == 0 || self.r >= self.n {
            return Err(Error::invalid("r", "subspace dimension must satisfy 1 <= r < n"));
        }
        if !(self.p_edge > 0.0 && self.p_edge <= 1.0) {
            return Err(Error::invalid("p_edge", "must lie in (0, 1]"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "SNR must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        if self.signal_draws == 0 {
            return Err(Error::invalid("signal_draws", "need at least one draw"));
        }
        self.design.validate()
    }
}

/// Per-trial sums, indexed `[method][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Why the trial was excluded, if it was.
    pub error: Option<Error>,
    pub diagnostics: Option<DesignDiagnostics>,
    pub edge_count: usize,
    pub nmpe_num: Vec<Vec<f64>>,
    /// `tr(PΣP) = β²N + r`.
    pub nmpe_den: f64,
    pub nmse_num: Vec<Vec<f64>>,
    /// `Σ ‖ξ‖²` over the trial's draws.
    pub nmse_den: f64,
}

impl TrialOutcome {
    fn excluded(trial: usize, error: Error) -> Self {
        Self {
            trial,
            error: Some(error),
            diagnostics: None,
            edge_count: 0,
            nmpe_num: Vec::new(),
            nmpe_den: 0.0,
            nmse_num: Vec::new(),
            nmse_den: 0.0,
        }
    }

    pub fn is_excluded(&self) -> bool {
        self.error.is_some()
    }

    pub fn is_approximate(&self) -> bool {
        self.diagnostics.as_ref().is_some_and(|d| d.approximate)
    }

    /// This trial's own curve for one method; empty if excluded.
    pub fn curve(&self, method: ShiftMethod, metric: Metric) -> Vec<f64> {
        if self.is_excluded() {
            return Vec::new();
        }
        let (num, den) = match metric {
            Metric::Nmpe => (&self.nmpe_num, self.nmpe_den),
            Metric::Nmse => (&self.nmse_num, self.nmse_den),
        };
        num[method.index()].iter().map(|x| x / den).collect()
    }
}

/// Runs one trial: draws graph, subspace and signals from seeds derived
/// from `(cfg.seed, trial)`, designs the shift, then scores every method.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialOutcome {
    let t = trial as u64;
    let g = match DirectedGraph::generate_erdos_renyi(cfg.n, cfg.p_edge, derive_seed(cfg.seed, t, SEED_GRAPH)) {
        Ok(g) => g,
        Err(e) => return TrialOutcome::excluded(trial, e),
    };
    let basis = match SubspaceBasis::random(cfg.n, cfg.r, derive_seed(cfg.seed, t, SEED_BASIS)) {
        Ok(b) => b,
        Err(e) => return TrialOutcome::excluded(trial, e),
    };
    let design_cfg = DesignConfig {
        retry_seed: derive_seed(cfg.seed, t, SEED_RETRY),
        ..cfg.design.clone()
    };
    let designed = match design_shift(&g, &basis, &design_cfg) {
        Ok(d) => d,
        Err(e) => return TrialOutcome::excluded(trial, e),
    };
    let p = basis.proj();
    let shifts = [
        designed.shift.clone(),
        baseline_shift(&g, BaselineKind::Adjacency),
        baseline_shift(&g, BaselineKind::Laplacian),
        ls_shift(&g, p).expect("basis and graph sizes agree"),
    ];

    let mut rng = rng_from_seed(derive_seed(cfg.seed, t, SEED_SIGNALS));
    let samples: Vec<_> = (0..cfg.signal_draws)
        .map(|_| generate_signal_with(&basis, cfg.beta, &mut rng).expect("beta validated"))
        .collect();
    let nmse_den = samples.iter().map(|s| s.xi.norm_squared()).sum();

    let sigma_half = signal_covariance_sqrt(&basis, cfg.beta);
    let mut nmpe_num = vec![Vec::new(); shifts.len()];
    let mut nmse_num = vec![Vec::new(); shifts.len()];
    for (m, s) in shifts.iter().enumerate() {
        let (hs, errs) = nested_pernode_transforms(s, p, &sigma_half, cfg.l_max);
        nmpe_num[m] = errs;
        nmse_num[m] = hs
            .iter()
            .map(|h| samples.iter().map(|smp| (&smp.xi - h * &smp.z).norm_squared()).sum())
            .collect();
    }

    TrialOutcome {
        trial,
        error: None,
        diagnostics: Some(designed.diagnostics),
        edge_count: g.edge_count(),
        nmpe_num,
        nmpe_den: cfg.beta * cfg.beta * cfg.n as f64 + cfg.r as f64,
        nmse_num,
        nmse_den,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub method: ShiftMethod,
    pub metric: Metric,
    /// Indexed by exchange count `0..=l_max`; NaN if no trial contributed.
    pub values: Vec<f64>,
    /// Trials contributing to `values`.
    pub trials: usize,
    pub excluded_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub config: ExperimentConfig,
    /// Every non-excluded trial.
    pub curves: Vec<MetricCurve>,
    /// Only trials whose design passed the feasibility checks.
    pub feasible_curves: Vec<MetricCurve>,
    pub outcomes: Vec<TrialOutcome>,
    pub excluded_trials: usize,
    pub approximate_trials: usize,
}

impl MonteCarloReport {
    pub fn curve(&self, method: ShiftMethod, metric: Metric) -> &MetricCurve {
        find_curve(&self.curves, method, metric)
    }

    pub fn feasible_curve(&self, method: ShiftMethod, metric: Metric) -> &MetricCurve {
        find_curve(&self.feasible_curves, method, metric)
    }
}

fn find_curve(curves: &[MetricCurve], method: ShiftMethod, metric: Metric) -> &MetricCurve {
    curves
        .iter()
        .find(|c| c.method == method && c.metric == metric)
        .expect("every method and metric has a curve")
}

fn build_curves(cfg: &ExperimentConfig, outcomes: &[&TrialOutcome], excluded: usize) -> Vec<MetricCurve> {
    let mut curves = Vec::new();
    for metric in [Metric::Nmpe, Metric::Nmse] {
        for method in ShiftMethod::ALL {
            let mut num = vec![0.0; cfg.l_max + 1];
            let mut den = 0.0;
            for o in outcomes {
                let (rows, d) = match metric {
                    Metric::Nmpe => (&o.nmpe_num, o.nmpe_den),
                    Metric::Nmse => (&o.nmse_num, o.nmse_den),
                };
                for (acc, x) in num.iter_mut().zip(&rows[method.index()]) {
                    *acc += x;
                }
                den += d;
            }
            let values = num
                .iter()
                .map(|x| if outcomes.is_empty() { f64::NAN } else { x / den })
                .collect();
            curves.push(MetricCurve {
                method,
                metric,
                values,
                trials: outcomes.len(),
                excluded_trials: excluded,
            });
        }
    }
    curves
}

/// Aggregates outcomes in the order given.
pub fn aggregate(cfg: &ExperimentConfig, outcomes: Vec<TrialOutcome>) -> MonteCarloReport {
    let included: Vec<&TrialOutcome> = outcomes.iter().filter(|o| !o.is_excluded()).collect();
    let excluded = outcomes.len() - included.len();
    let feasible: Vec<&TrialOutcome> = included.iter().copied().filter(|o| !o.is_approximate()).collect();
    let approximate = included.len() - feasible.len();
    MonteCarloReport {
        config: cfg.clone(),
        curves: build_curves(cfg, &included, excluded),
        feasible_curves: build_curves(cfg, &feasible, excluded + approximate),
        excluded_trials: excluded,
        approximate_trials: approximate,
        outcomes,
    }
}

/// Runs every trial sequentially and aggregates.
pub fn monte_carlo_report(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials).map(|t| run_trial(cfg, t)).collect();
    Ok(aggregate(cfg, outcomes))
}
