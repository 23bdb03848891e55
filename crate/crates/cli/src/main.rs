//! `subcell`: operator verification and overset-grid experiments.
//!
//! Exit status: 0 if every internal check passed, 1 if a check failed or a
//! run errored, 2 for usage and configuration errors.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use subcell_sbp::FluxKind;

use crate::commands::Outcome;
use crate::config::{parse_elements, Config, Overrides};

type Action = fn(&Config, &std::path::Path) -> anyhow::Result<Outcome>;

#[derive(Parser)]
#[command(
    name = "subcell",
    version,
    about = "Sub-cell SBP operators and overset-grid experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and verify sub-cell operators over degrees, families and splits.
    Verify(Common),
    /// L2 errors and convergence orders under uniform refinement.
    Convergence(Common),
    /// Integrate in time, recording conservation, energy and entropy.
    Run(Common),
    /// Eigenvalues of the semi-discrete Jacobian.
    Spectrum(Common),
    /// Repeat a run with several numerical fluxes.
    CompareFluxes(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration, e.g. advection-table1.
    #[arg(long)]
    preset: Option<String>,
    /// Polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
    /// Elements per mesh: `N` or `N_U,N_V`.
    #[arg(long, value_parser = parse_elements)]
    elements: Option<(usize, usize)>,
    /// Surface and sub-cell-point numerical flux.
    #[arg(long)]
    flux: Option<FluxKind>,
    /// Output directory.
    #[arg(long, env = "SUBCELL_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => Config::load(path)?,
            (None, Some(name)) => Config::preset(name)?,
            (None, None) => Config::parse("")?,
        };
        cfg.apply(&Overrides {
            degree: self.degree,
            elements: self.elements,
            flux: self.flux,
            output_dir: self.output_dir.clone(),
        })?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, action): (&Common, Action) = match &cli.command {
        Command::Verify(c) => (c, commands::verify),
        Command::Convergence(c) => (c, commands::convergence),
        Command::Run(c) => (c, commands::run_cmd),
        Command::Spectrum(c) => (c, commands::spectrum_cmd),
        Command::CompareFluxes(c) => (c, commands::compare_fluxes),
    };
    let cfg = match common.load() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let dir = cfg.output.dir.clone();
    match action(&cfg, &dir) {
        Ok(outcome) => {
            println!();
            for c in &outcome.checks {
                println!(
                    "check {}: {} ({})",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            println!("output written to {}", dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
