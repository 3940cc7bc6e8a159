use std::io;
use std::process::ExitCode;

use clap::Parser;
use shiftproj::{cmd_bench, cmd_design, cmd_simulate, cmd_synthesize, Cli, Command};

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    match &cli.command {
        Command::Design(args) => {
            let run = cmd_design(args, &mut out)?;
            if run.config.strict && run.result.diagnostics.approximate {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Synthesize(args) => {
            cmd_synthesize(args, &mut out)?;
        }
        Command::Simulate(args) => {
            cmd_simulate(args, &mut out)?;
        }
        Command::Bench(args) => {
            cmd_bench(args, &mut out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
