//! The four subcommands. Each resolves its config, runs, then writes all
//! of its artifacts at the end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use shiftproj_core::metrics::{SEED_BASIS, SEED_GRAPH, SEED_RETRY, SEED_SIGNALS};
use shiftproj_core::rng::{derive_seed, rng_from_seed, standard_normal_vector};
use shiftproj_core::{
    design_shift, fit_coefficients_pernode, fit_coefficients_shared, generate_signal,
    minimal_order, simulate_exchanges, Coefficients, DMatrix, DesignResult, DirectedGraph,
    FilterMode, GraphFilter, Metric, MonteCarloReport, ShiftMethod, SubspaceBasis,
};

use crate::config::{CommonArgs, Inferred, MetricSelection, RunConfig};
use crate::formats::{self, TrajectoryRow};
use crate::runner::monte_carlo_parallel;

#[derive(Debug, Parser)]
#[command(name = "shiftproj", version, about = "Design topology-constrained graph shifts for decentralized subspace projection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a shift for a random or given graph
    Design(DesignArgs),
    /// Fit filter coefficients for a shift and a subspace
    Synthesize(SynthesizeArgs),
    /// Run the exchange protocol with a shift and a filter
    Simulate(SimulateArgs),
    /// Monte Carlo comparison against the baseline shifts
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Subspace basis CSV (N x r) instead of a random one
    #[arg(long, value_name = "PATH")]
    pub basis: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Shift matrix CSV
    #[arg(long, value_name = "PATH")]
    pub shift: PathBuf,
    /// Subspace basis CSV (N x r)
    #[arg(long, value_name = "PATH")]
    pub basis: PathBuf,
    /// Coefficient sharing across nodes
    #[arg(long, default_value = "per-node")]
    pub mode: FilterMode,
    /// Fixed filter order; the smallest order meeting --fit-tol otherwise
    #[arg(long)]
    pub order: Option<usize>,
    /// Relative fit residual accepted when searching for the order
    #[arg(long, default_value_t = 1e-9)]
    pub fit_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Shift matrix CSV
    #[arg(long, value_name = "PATH")]
    pub shift: PathBuf,
    /// Filter JSON
    #[arg(long, value_name = "PATH")]
    pub filter: PathBuf,
    /// Basis CSV; draws the signal from the subspace model and adds the
    /// projection target to the output
    #[arg(long, value_name = "PATH")]
    pub basis: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

pub struct DesignRun {
    pub config: RunConfig,
    pub graph: DirectedGraph,
    pub basis: SubspaceBasis,
    pub result: DesignResult,
}

/// Writes `shift.csv`, `basis.csv`, `edges.txt` and `diagnostics.json`.
pub fn cmd_design(args: &DesignArgs, log: &mut dyn Write) -> Result<DesignRun> {
    let given_basis = args.basis.as_deref().map(formats::read_basis_csv).transpose()?;
    let mut inferred = Inferred::default();
    if let (Some(b), Some(path)) = (&given_basis, &args.basis) {
        inferred.n = Some((b.n(), format!("basis {}", path.display())));
        inferred.r = Some((b.r(), format!("basis {}", path.display())));
    }
    let mut cfg = RunConfig::resolve_with("design", &args.common, inferred)?;
    if let Some(path) = &args.basis {
        cfg = cfg.with_input("basis", path.display());
    }
    let graph = match &cfg.edges {
        Some(path) => {
            let g = formats::read_edge_list(path)?;
            ensure!(
                g.node_count() == cfg.n,
                "dimension mismatch: edge list {} has {} nodes but the basis has {}",
                path.display(),
                g.node_count(),
                cfg.n
            );
            g
        }
        None => DirectedGraph::generate_erdos_renyi(cfg.n, cfg.p_edge, derive_seed(cfg.seed, 0, SEED_GRAPH))?,
    };
    let basis = match given_basis {
        Some(b) => b,
        None => SubspaceBasis::random(cfg.n, cfg.r, derive_seed(cfg.seed, 0, SEED_BASIS))?,
    };
    let design = shiftproj_core::DesignConfig {
        retry_seed: derive_seed(cfg.seed, 0, SEED_RETRY),
        ..cfg.design()
    };
    let result = design_shift(&graph, &basis, &design)?;

    let out = prepare_out(&cfg)?;
    formats::write_matrix_csv(&out.join("shift.csv"), &result.shift, &cfg)?;
    formats::write_basis_csv(&out.join("basis.csv"), &basis, &cfg)?;
    formats::write_edge_list(&out.join("edges.txt"), &graph, &cfg)?;
    formats::write_diagnostics_json(&out.join("diagnostics.json"), &result.diagnostics, &cfg)?;

    let d = &result.diagnostics;
    writeln!(log, "n = {}, r = {}, edges = {}", cfg.n, cfg.r, graph.edge_count())?;
    writeln!(log, "objective        {:.6e}", d.objective)?;
    writeln!(log, "topo_residual    {:.3e}", d.topo_residual)?;
    writeln!(log, "trace_residual   {:.3e}", d.trace_residual)?;
    writeln!(log, "sep_margin       {:.3e}", d.sep_margin)?;
    writeln!(log, "tprime_full_rank {} ({}/{})", d.tprime_full_rank, d.tprime_rank, d.tprime_rows)?;
    writeln!(log, "iterations       {} (converged: {})", d.iterations, d.converged)?;
    writeln!(log, "epsilon_used     {} after {} attempt(s)", d.epsilon_used, d.attempts)?;
    if d.approximate {
        writeln!(log, "design is approximate: no attempt passed the feasibility checks")?;
    }
    Ok(DesignRun {
        config: cfg,
        graph,
        basis,
        result,
    })
}

/// Writes `filter.json`.
pub fn cmd_synthesize(args: &SynthesizeArgs, log: &mut dyn Write) -> Result<GraphFilter> {
    let s = formats::read_square_csv(&args.shift)?;
    let basis = formats::read_basis_csv(&args.basis)?;
    check_sizes(&args.shift, s.nrows(), &format!("basis {}", args.basis.display()), basis.n())?;
    let inferred = Inferred {
        n: Some((s.nrows(), format!("shift {}", args.shift.display()))),
        r: Some((basis.r(), format!("basis {}", args.basis.display()))),
    };
    let mut cfg = RunConfig::resolve_with("synthesize", &args.common, inferred)?
        .with_input("shift", args.shift.display())
        .with_input("basis", args.basis.display())
        .with_input("fit_mode", args.mode)
        .with_input("fit_tol", args.fit_tol);
    if let Some(order) = args.order {
        cfg = cfg.with_input("fit_order", order);
    }
    let p = basis.proj();
    let filter = match args.order {
        Some(order) => match args.mode {
            FilterMode::Shared => fit_coefficients_shared(&s, p, order)?,
            FilterMode::PerNode => fit_coefficients_pernode(&s, p, order)?,
        },
        None => match minimal_order(&s, p, args.fit_tol, args.mode)? {
            Some(f) => f,
            None => {
                writeln!(
                    log,
                    "no order up to {} reaches fit residual {:e}; using order {}",
                    cfg.n - 1,
                    args.fit_tol,
                    cfg.n - 1
                )?;
                match args.mode {
                    FilterMode::Shared => fit_coefficients_shared(&s, p, cfg.n - 1)?,
                    FilterMode::PerNode => fit_coefficients_pernode(&s, p, cfg.n - 1)?,
                }
            }
        },
    };
    let out = prepare_out(&cfg)?;
    formats::write_filter_json(&out.join("filter.json"), &filter, &cfg)?;
    writeln!(
        log,
        "{} filter of order {} with fit residual {:.3e}",
        filter.mode(),
        filter.order,
        filter.fit_residual
    )?;
    Ok(filter)
}

fn check_sizes(shift: &Path, n: usize, other: &str, m: usize) -> Result<()> {
    if n != m {
        bail!(
            "dimension mismatch: shift {} has {n} nodes but {other} has {m}",
            shift.display()
        );
    }
    Ok(())
}

/// Edges `j -> i` for every nonzero off-diagonal `S[i, j]`.
fn support_graph(s: &DMatrix<f64>) -> Result<DirectedGraph> {
    let n = s.nrows();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && s[(i, j)] != 0.0)
        .map(|(i, j)| (j, i));
    Ok(DirectedGraph::new(n, edges)?)
}

/// Writes `trajectory.csv`.
pub fn cmd_simulate(args: &SimulateArgs, log: &mut dyn Write) -> Result<Vec<TrajectoryRow>> {
    let s = formats::read_square_csv(&args.shift)?;
    let n = s.nrows();
    let filter = formats::read_filter_json(&args.filter)?;
    if let Coefficients::PerNode(c) = &filter.coefficients {
        check_sizes(&args.shift, n, &format!("filter {}", args.filter.display()), c.nrows())?;
    }
    let basis = args.basis.as_deref().map(formats::read_basis_csv).transpose()?;
    let mut inferred = Inferred {
        n: Some((n, format!("shift {}", args.shift.display()))),
        r: None,
    };
    if let (Some(b), Some(path)) = (&basis, &args.basis) {
        check_sizes(&args.shift, n, &format!("basis {}", path.display()), b.n())?;
        inferred.r = Some((b.r(), format!("basis {}", path.display())));
    }
    let mut cfg = RunConfig::resolve_with("simulate", &args.common, inferred)?
        .with_input("shift", args.shift.display())
        .with_input("filter", args.filter.display());
    if let Some(path) = &args.basis {
        cfg = cfg.with_input("basis", path.display());
    }
    let graph = match &cfg.edges {
        Some(path) => formats::read_edge_list(path)?,
        None => support_graph(&s)?,
    };

    let seed = derive_seed(cfg.seed, 0, SEED_SIGNALS);
    let (z, target) = match &basis {
        Some(b) => {
            let z = generate_signal(b, cfg.beta, seed)?.z;
            let t = b.proj() * &z;
            (z, Some(t))
        }
        None => (standard_normal_vector(&mut rng_from_seed(seed), n), None),
    };
    let traj = simulate_exchanges(&graph, &s, &z, filter.order)?;
    let mut rows = Vec::with_capacity(n * (filter.order + 1));
    let mut running = vec![0.0; n];
    for (l, y) in traj.states.iter().enumerate() {
        for i in 0..n {
            running[i] += filter.coefficient(i, l) * y[i];
            rows.push(TrajectoryRow {
                exchange: l,
                node: i,
                state: y[i],
                estimate: running[i],
                target: target.as_ref().map(|t| t[i]),
                messages_sent: traj.messages_sent[l],
            });
        }
    }
    let out = prepare_out(&cfg)?;
    formats::write_trajectory_csv(&out.join("trajectory.csv"), &rows, &cfg)?;
    writeln!(
        log,
        "{} exchanges over {} edges, {} messages",
        filter.order,
        graph.edge_count(),
        traj.messages_sent[filter.order]
    )?;
    if let Some(t) = &target {
        let est = traj.estimate(&filter)?;
        writeln!(log, "relative error to projection {:.3e}", (est - t).norm() / t.norm())?;
    }
    Ok(rows)
}

fn selected_metrics(sel: MetricSelection) -> Vec<Metric> {
    match sel {
        MetricSelection::Nmpe => vec![Metric::Nmpe],
        MetricSelection::Nmse => vec![Metric::Nmse],
        MetricSelection::Both => vec![Metric::Nmpe, Metric::Nmse],
    }
}

/// Writes `metrics.csv`, `metrics_feasible.csv` and `trials.csv`, then
/// prints the curves' values at the final budget.
pub fn cmd_bench(args: &BenchArgs, log: &mut dyn Write) -> Result<MonteCarloReport> {
    let cfg = RunConfig::resolve("bench", &args.common)?;
    let report = monte_carlo_parallel(&cfg.experiment())?;
    let metrics = selected_metrics(cfg.metric);

    let out = prepare_out(&cfg)?;
    let all = formats::format_metrics_csv(&formats::select_curves(&report.curves, &metrics), &cfg)?;
    let feasible = formats::format_metrics_csv(&formats::select_curves(&report.feasible_curves, &metrics), &cfg)?;
    let trials = formats::format_trials_csv(&report, &cfg)?;
    for (name, body) in [("metrics.csv", all), ("metrics_feasible.csv", feasible), ("trials.csv", trials)] {
        let path = out.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }

    writeln!(
        log,
        "{} trials: {} excluded, {} approximate",
        cfg.trials, report.excluded_trials, report.approximate_trials
    )?;
    write!(log, "{:<10}", "method")?;
    for m in &metrics {
        write!(log, " {:>14}", format!("{}@{}", m.as_str(), cfg.l_max))?;
    }
    writeln!(log)?;
    for method in ShiftMethod::ALL {
        write!(log, "{:<10}", method.label())?;
        for &m in &metrics {
            write!(log, " {:>14.6e}", report.curve(method, m).values[cfg.l_max])?;
        }
        writeln!(log)?;
    }
    Ok(report)
}
