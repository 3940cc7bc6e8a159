//! Command-line front end for `shiftproj-core`: run configuration, file
//! formats, the parallel benchmark runner and the four subcommands.

pub mod commands;
pub mod config;
pub mod formats;
pub mod runner;

pub use commands::{cmd_bench, cmd_design, cmd_simulate, cmd_synthesize, Cli, Command};
pub use config::{CommonArgs, Inferred, MetricSelection, Preset, RunConfig};
pub use runner::monte_carlo_parallel;
