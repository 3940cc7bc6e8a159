//! On-disk formats. Every writer puts the resolved config on a leading
//! `#` line; every reader skips `#` lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use shiftproj_core::{
    Coefficients, DMatrix, DVector, DesignDiagnostics, DirectedGraph, FilterMode, GraphFilter,
    MonteCarloReport, Metric, MetricCurve, ShiftMethod, SubspaceBasis,
};

use crate::config::RunConfig;

fn header(cfg: &RunConfig) -> String {
    format!("# config: {}\n", cfg.echo())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `n m` on the first data line, then one `tail head` pair per line.
pub fn write_edge_list(path: &Path, g: &DirectedGraph, cfg: &RunConfig) -> Result<()> {
    let mut out = header(cfg);
    out.push_str(&format!("{} {}\n", g.node_count(), g.edge_count()));
    for (t, h) in g.edges() {
        out.push_str(&format!("{t} {h}\n"));
    }
    write_file(path, &out)
}

pub fn read_edge_list(path: &Path) -> Result<DirectedGraph> {
    let text = read_file(path)?;
    let mut lines = data_lines(&text);
    let parse_pair = |line: usize, s: &str| -> Result<(usize, usize)> {
        let mut it = s.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
            _ => bail!("{}:{line}: expected two non-negative integers, found `{s}`", path.display()),
        }
    };
    let Some((line, first)) = lines.next() else {
        bail!("{}: empty edge list", path.display());
    };
    let (n, m) = parse_pair(line, first)?;
    let edges = lines.map(|(line, s)| parse_pair(line, s)).collect::<Result<Vec<_>>>()?;
    ensure!(
        edges.len() == m,
        "{}: header declares {m} edges but {} follow",
        path.display(),
        edges.len()
    );
    DirectedGraph::new(n, edges).with_context(|| format!("invalid edge list {}", path.display()))
}

fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Row-major, one matrix row per line.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>, cfg: &RunConfig) -> Result<()> {
    write_file(path, &(header(cfg) + &format_matrix(m)))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 1))?;
        if let Some(first) = rows.first() {
            ensure!(
                row.len() == first.len(),
                "{}: row {} has {} columns, expected {}",
                path.display(),
                i + 1,
                row.len(),
                first.len()
            );
        }
        rows.push(row);
    }
    ensure!(!rows.is_empty(), "{}: no matrix rows", path.display());
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_square_csv(path: &Path) -> Result<DMatrix<f64>> {
    let m = read_matrix_csv(path)?;
    ensure!(
        m.is_square(),
        "{}: shift must be square, found {}x{}",
        path.display(),
        m.nrows(),
        m.ncols()
    );
    Ok(m)
}

/// `U∥` as an `N × r` matrix CSV.
pub fn write_basis_csv(path: &Path, basis: &SubspaceBasis, cfg: &RunConfig) -> Result<()> {
    write_matrix_csv(path, basis.u_par(), cfg)
}

pub fn read_basis_csv(path: &Path) -> Result<SubspaceBasis> {
    let u = read_matrix_csv(path)?;
    SubspaceBasis::from_orthonormal(&u).with_context(|| format!("invalid basis {}", path.display()))
}

#[derive(Serialize)]
struct DiagnosticsDoc<'a> {
    objective: f64,
    topo_residual: f64,
    trace_residual: f64,
    sep_margin: f64,
    tprime_full_rank: bool,
    epsilon_used: f64,
    iterations: usize,
    structure_residual: f64,
    admm_residual: f64,
    sep_passed: bool,
    tprime_rank: usize,
    tprime_rows: usize,
    poly_fit_residual: f64,
    converged: bool,
    attempts: usize,
    approximate: bool,
    #[serde(flatten)]
    config: &'a RunConfig,
}

/// Flat key-value document: diagnostics first, then the config keys.
pub fn write_diagnostics_json(path: &Path, d: &DesignDiagnostics, cfg: &RunConfig) -> Result<()> {
    let doc = DiagnosticsDoc {
        objective: d.objective,
        topo_residual: d.topo_residual,
        trace_residual: d.trace_residual,
        sep_margin: d.sep_margin,
        tprime_full_rank: d.tprime_full_rank,
        epsilon_used: d.epsilon_used,
        iterations: d.iterations,
        structure_residual: d.structure_residual,
        admm_residual: d.admm_residuals.max(),
        sep_passed: d.sep_passed,
        tprime_rank: d.tprime_rank,
        tprime_rows: d.tprime_rows,
        poly_fit_residual: d.poly_fit_residual,
        converged: d.converged,
        attempts: d.attempts,
        approximate: d.approximate,
        config: cfg,
    };
    write_file(path, &(serde_json::to_string_pretty(&doc)? + "\n"))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefficientsDoc {
    Shared(Vec<f64>),
    PerNode(Vec<Vec<f64>>),
}

#[derive(Serialize)]
struct FilterDocOut<'a> {
    order: usize,
    mode: &'static str,
    coefficients: CoefficientsDoc,
    fit_residual: f64,
    #[serde(flatten)]
    config: &'a RunConfig,
}

#[derive(Deserialize)]
struct FilterDocIn {
    order: usize,
    mode: String,
    coefficients: CoefficientsDoc,
    fit_residual: Option<f64>,
}

/// `{order, mode, coefficients, fit_residual}`; per-node coefficients are
/// nested rows, one per node.
pub fn write_filter_json(path: &Path, f: &GraphFilter, cfg: &RunConfig) -> Result<()> {
    let coefficients = match &f.coefficients {
        Coefficients::Shared(c) => CoefficientsDoc::Shared(c.iter().copied().collect()),
        Coefficients::PerNode(c) => CoefficientsDoc::PerNode(
            (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect(),
        ),
    };
    let doc = FilterDocOut {
        order: f.order,
        mode: f.mode().as_str(),
        coefficients,
        fit_residual: f.fit_residual,
        config: cfg,
    };
    write_file(path, &(serde_json::to_string_pretty(&doc)? + "\n"))
}

pub fn read_filter_json(path: &Path) -> Result<GraphFilter> {
    let doc: FilterDocIn = serde_json::from_str(&read_file(path)?)
        .with_context(|| format!("invalid filter file {}", path.display()))?;
    let mode: FilterMode = doc
        .mode
        .parse()
        .with_context(|| format!("{}: bad mode", path.display()))?;
    let coefficients = match (mode, doc.coefficients) {
        (FilterMode::Shared, CoefficientsDoc::Shared(c)) => Coefficients::Shared(DVector::from_vec(c)),
        (FilterMode::PerNode, CoefficientsDoc::PerNode(rows)) => {
            ensure!(!rows.is_empty(), "{}: no coefficient rows", path.display());
            let width = rows[0].len();
            ensure!(
                rows.iter().all(|r| r.len() == width),
                "{}: ragged coefficient rows",
                path.display()
            );
            Coefficients::PerNode(DMatrix::from_fn(rows.len(), width, |i, l| rows[i][l]))
        }
        (mode, _) => bail!("{}: coefficient layout does not match mode `{mode}`", path.display()),
    };
    GraphFilter::new(doc.order, coefficients, doc.fit_residual.unwrap_or(f64::NAN))
        .with_context(|| format!("invalid filter file {}", path.display()))
}

pub const METRICS_COLUMNS: [&str; 13] = [
    "method", "exchange", "value", "metric", "n", "r", "p_edge", "beta", "epsilon", "rho", "i_max",
    "trials", "excluded_trials",
];

/// One row per `(method, exchange)` for each selected metric.
pub fn format_metrics_csv(curves: &[&MetricCurve], cfg: &RunConfig) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS)?;
    for c in curves {
        for (l, v) in c.values.iter().enumerate() {
            w.write_record([
                c.method.label().to_owned(),
                l.to_string(),
                v.to_string(),
                c.metric.as_str().to_owned(),
                cfg.n.to_string(),
                cfg.r.to_string(),
                cfg.p_edge.to_string(),
                cfg.beta.to_string(),
                cfg.epsilon.to_string(),
                cfg.rho.to_string(),
                cfg.i_max.to_string(),
                c.trials.to_string(),
                c.excluded_trials.to_string(),
            ])?;
        }
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(header(cfg) + &body)
}

pub fn select_curves<'a>(
    curves: &'a [MetricCurve],
    metrics: &[Metric],
) -> Vec<&'a MetricCurve> {
    metrics
        .iter()
        .flat_map(|&m| {
            ShiftMethod::ALL
                .into_iter()
                .filter_map(move |method| curves.iter().find(|c| c.method == method && c.metric == m))
        })
        .collect()
}

/// Per-trial design diagnostics of a benchmark run.
pub fn format_trials_csv(report: &MonteCarloReport, cfg: &RunConfig) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "trial",
        "status",
        "edges",
        "objective",
        "topo_residual",
        "trace_residual",
        "sep_margin",
        "tprime_full_rank",
        "epsilon_used",
        "iterations",
        "attempts",
        "error",
    ])?;
    for o in &report.outcomes {
        let status = if o.is_excluded() {
            "excluded"
        } else if o.is_approximate() {
            "approximate"
        } else {
            "feasible"
        };
        let mut rec = vec![o.trial.to_string(), status.to_owned(), o.edge_count.to_string()];
        match &o.diagnostics {
            Some(d) => rec.extend([
                d.objective.to_string(),
                d.topo_residual.to_string(),
                d.trace_residual.to_string(),
                d.sep_margin.to_string(),
                d.tprime_full_rank.to_string(),
                d.epsilon_used.to_string(),
                d.iterations.to_string(),
                d.attempts.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        rec.push(o.error.as_ref().map(|e| e.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(header(cfg) + &body)
}

/// One row per `(exchange, node)`: state, running estimate, target, and
/// cumulative message count.
pub struct TrajectoryRow {
    pub exchange: usize,
    pub node: usize,
    pub state: f64,
    pub estimate: f64,
    pub target: Option<f64>,
    pub messages_sent: usize,
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow], cfg: &RunConfig) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["exchange", "node", "state", "estimate", "target", "messages_sent"])?;
    for r in rows {
        w.write_record([
            r.exchange.to_string(),
            r.node.to_string(),
            r.state.to_string(),
            r.estimate.to_string(),
            r.target.map(|t| t.to_string()).unwrap_or_default(),
            r.messages_sent.to_string(),
        ])?;
    }
    let mut out = header(cfg).into_bytes();
    out.write_all(&w.into_inner()?)?;
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}
