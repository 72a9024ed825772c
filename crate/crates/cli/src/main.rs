use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gburgers_cli::config::{Check, RunConfig};
use gburgers_cli::run::{self, Outcome};

#[derive(Parser)]
#[command(name = "gburgers", version, about = "Mild solutions of u_t - u_xx + (1+x^2)^-alpha u u_x = 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled checks, overriding `study.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run a single check (or, for verify-kernel, a single identity).
    #[arg(long, global = true)]
    check: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve and write the solution CSV, metadata and a plot.
    Solve,
    /// Evaluate the heat-kernel integral identities.
    VerifyKernel,
    /// Solve and run the invariant checks.
    Invariants,
    /// Compare against the finite-difference solver.
    Compare,
    /// Run the checks over every alpha and data combination of the sweep.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}", run::diagnostic(&e));
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    match execute(&cli, &cfg, &out) {
        Ok(outcome) => {
            print!("{}", outcome.summary());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if out.is_dir() {
                if let Err(w) = run::write_diagnostic(&out, &e) {
                    eprintln!("could not write diagnostics: {w:#}");
                }
            }
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let (Some(name), false) = (&cli.check, matches!(cli.command, Command::VerifyKernel)) {
        name.parse::<Check>()?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &RunConfig, out: &PathBuf) -> Result<Outcome> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let seed = cli.seed.unwrap_or(cfg.study.seed);
    let only = match (&cli.check, cli.command) {
        (Some(name), c) if !matches!(c, Command::VerifyKernel) => Some(name.parse::<Check>()?),
        _ => None,
    };
    match cli.command {
        Command::Solve => run::solve(cfg, out, seed),
        Command::VerifyKernel => run::verify_kernel(cfg, out, cli.check.as_deref()),
        Command::Invariants => run::invariants(cfg, out, seed, only),
        Command::Compare => run::compare(cfg, out, seed),
        Command::Sweep => run::sweep(cfg, out, seed, only),
    }
}
