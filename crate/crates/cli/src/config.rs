//! Run configuration: presets, an optional JSON file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use shiftproj_core::{DesignConfig, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
}

impl Preset {
    pub fn experiment(self) -> ExperimentConfig {
        match self {
            Preset::Fig1 => ExperimentConfig::fig1(),
            Preset::Fig2 => ExperimentConfig::fig2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricSelection {
    Nmpe,
    Nmse,
    #[default]
    Both,
}

/// Flags shared by every subcommand. The same keys, in snake case, may
/// appear in a `--config` JSON file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// JSON file setting any of these flags; flags on the command line win
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Parameter set to start from
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of nodes
    #[arg(long)]
    pub n: Option<usize>,
    /// Signal subspace dimension
    #[arg(long)]
    pub r: Option<usize>,
    /// Directed edge probability
    #[arg(long)]
    pub p_edge: Option<f64>,
    /// Signal-to-noise ratio
    #[arg(long)]
    pub beta: Option<f64>,
    /// Trace parameter
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// ADMM penalty
    #[arg(long)]
    pub rho: Option<f64>,
    /// ADMM iteration cap
    #[arg(long)]
    pub i_max: Option<usize>,
    /// Largest exchange budget (defaults to n - 1)
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Monte Carlo trials
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampled observations per trial for NMSE
    #[arg(long)]
    pub signal_draws: Option<usize>,
    /// Extra ε attempts after the first
    #[arg(long)]
    pub max_eps_retries: Option<usize>,
    /// Edge list to use instead of a random graph
    #[arg(long, value_name = "PATH")]
    pub edges: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Exit with status 2 when the design is flagged approximate
    #[arg(long)]
    #[serde(default)]
    pub strict: bool,
    /// Metrics written by `bench`
    #[arg(long, value_enum)]
    pub metric: Option<MetricSelection>,
}

impl CommonArgs {
    fn overlay(self, file: CommonArgs) -> CommonArgs {
        CommonArgs {
            config: self.config,
            preset: self.preset.or(file.preset),
            n: self.n.or(file.n),
            r: self.r.or(file.r),
            p_edge: self.p_edge.or(file.p_edge),
            beta: self.beta.or(file.beta),
            epsilon: self.epsilon.or(file.epsilon),
            rho: self.rho.or(file.rho),
            i_max: self.i_max.or(file.i_max),
            l_max: self.l_max.or(file.l_max),
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed),
            signal_draws: self.signal_draws.or(file.signal_draws),
            max_eps_retries: self.max_eps_retries.or(file.max_eps_retries),
            edges: self.edges.or(file.edges),
            out: self.out.or(file.out),
            strict: self.strict || file.strict,
            metric: self.metric.or(file.metric),
        }
    }
}

/// Fully resolved parameters. Serialized into every artifact so a run can
/// be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub preset: Option<Preset>,
    pub n: usize,
    pub r: usize,
    pub p_edge: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub i_max: usize,
    pub residual_tol: f64,
    pub sep_tol: f64,
    pub rank_tol: f64,
    pub max_eps_retries: usize,
    pub l_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub signal_draws: usize,
    pub strict: bool,
    pub metric: MetricSelection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    /// Subcommand-specific inputs such as file paths and fit settings.
    #[serde(flatten)]
    pub inputs: BTreeMap<String, String>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    /// Preset (default `fig1`), then the config file, then flags.
    pub fn resolve(command: &str, args: &CommonArgs) -> Result<Self> {
        Self::resolve_with(command, args, Inferred::default())
    }

    /// As [`RunConfig::resolve`], with sizes fixed by input files. An
    /// explicit `--n` or `--r` that disagrees is an error.
    pub fn resolve_with(command: &str, args: &CommonArgs, mut inferred: Inferred) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_config_file(path)?,
            None => CommonArgs::default(),
        };
        let a = args.clone().overlay(file);
        if inferred.n.is_none() {
            if let Some(path) = &a.edges {
                let g = crate::formats::read_edge_list(path)?;
                inferred.n = Some((g.node_count(), format!("edge list {}", path.display())));
            }
        }
        let base = a.preset.unwrap_or(Preset::Fig1).experiment();
        let n = pick("n", a.n, inferred.n, base.n)?;
        let r = pick("r", a.r, inferred.r, base.r.min(n.saturating_sub(1)).max(1))?;
        let cfg = RunConfig {
            command: command.to_owned(),
            preset: a.preset,
            n,
            r,
            p_edge: a.p_edge.unwrap_or(base.p_edge),
            beta: a.beta.unwrap_or(base.beta),
            epsilon: a.epsilon.unwrap_or(base.design.epsilon),
            rho: a.rho.unwrap_or(base.design.rho),
            i_max: a.i_max.unwrap_or(base.design.i_max),
            residual_tol: base.design.residual_tol,
            sep_tol: base.design.sep_tol,
            rank_tol: base.design.rank_tol,
            max_eps_retries: a.max_eps_retries.unwrap_or(base.design.max_eps_retries),
            l_max: a.l_max.unwrap_or(n.saturating_sub(1)),
            trials: a.trials.unwrap_or(base.trials),
            seed: a.seed.unwrap_or(base.seed),
            signal_draws: a.signal_draws.unwrap_or(base.signal_draws),
            strict: a.strict,
            metric: a.metric.unwrap_or_default(),
            edges: a.edges,
            inputs: BTreeMap::new(),
            out: a.out.unwrap_or_else(|| PathBuf::from(".")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            bail!("invalid config: n = {} but at least 2 nodes are needed", self.n);
        }
        if self.r == 0 || self.r >= self.n {
            bail!("invalid config: r = {} must satisfy 1 <= r < n = {}", self.r, self.n);
        }
        if !(self.p_edge > 0.0 && self.p_edge <= 1.0) {
            bail!("invalid config: p_edge = {} must lie in (0, 1]", self.p_edge);
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            bail!("invalid config: beta = {} must be positive", self.beta);
        }
        self.experiment().validate().context("invalid config")?;
        Ok(())
    }

    pub fn design(&self) -> DesignConfig {
        DesignConfig {
            epsilon: self.epsilon,
            rho: self.rho,
            i_max: self.i_max,
            residual_tol: self.residual_tol,
            sep_tol: self.sep_tol,
            rank_tol: self.rank_tol,
            max_eps_retries: self.max_eps_retries,
            retry_seed: 0,
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            r: self.r,
            p_edge: self.p_edge,
            beta: self.beta,
            l_max: self.l_max,
            trials: self.trials,
            seed: self.seed,
            signal_draws: self.signal_draws,
            design: self.design(),
        }
    }

    pub fn with_input(mut self, key: &str, value: impl ToString) -> Self {
        self.inputs.insert(key.to_owned(), value.to_string());
        self
    }

    /// One-line JSON rendering used in artifact headers.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Sizes read from input files, with a description of the source.
#[derive(Debug, Clone, Default)]
pub struct Inferred {
    pub n: Option<(usize, String)>,
    pub r: Option<(usize, String)>,
}

fn pick(name: &str, flag: Option<usize>, inferred: Option<(usize, String)>, default: usize) -> Result<usize> {
    match (flag, inferred) {
        (Some(f), Some((v, src))) if f != v => {
            bail!("dimension mismatch: --{name} is {f} but {src} has {name} = {v}")
        }
        (_, Some((v, _))) => Ok(v),
        (f, None) => Ok(f.unwrap_or(default)),
    }
}

fn read_config_file(path: &Path) -> Result<CommonArgs> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}
