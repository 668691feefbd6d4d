//! `dgsite`: power flow, distribution fitting, DG placement and re-scoring
//! from a single TOML run configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgsite::optimizer::OptimizeError;
use dgsite::powerflow::PowerFlowError;
use dgsite::stochastic::BetaFit;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "dgsite", version, about = "Stochastic DG siting and sizing on radial feeders")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; defaults to the bundled 33-bus case.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for weather sampling and the swarm.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation (0 = all cores). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo samples per hour.
    #[arg(long, global = true)]
    samples_per_hour: Option<usize>,
    /// Beta moment-fit variant.
    #[arg(long, global = true)]
    beta_fit: Option<BetaFit>,
    /// System power base, kVA.
    #[arg(long, global = true)]
    s_base_kva: Option<f64>,
    /// System voltage base, kV.
    #[arg(long, global = true)]
    v_base_kv: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the base case and write the voltage profile.
    Powerflow,
    /// Print the fitted hourly Rayleigh and Beta parameters as CSV.
    Fit,
    /// Search for the loss-minimizing allocation.
    Optimize,
    /// Score a fixed allocation over the sampled states.
    Evaluate {
        /// JSON file with an `allocation` array of `{kind, bus, kw}`.
        allocation_file: PathBuf,
    },
}

impl GlobalArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir.clone_from(out);
        }
        if let Some(m) = self.samples_per_hour {
            config.scenarios.samples_per_hour = m;
        }
        if let Some(fit) = self.beta_fit {
            config.scenarios.beta_fit = fit;
        }
        if let Some(s) = self.s_base_kva {
            config.base.s_base_kva = s;
        }
        if let Some(v) = self.v_base_kv {
            config.base.v_base_kv = v;
        }
        config.pso.seed = config.seed;
        config.validate()?;
        Ok(config)
    }
}

/// Process exit status for a failed run.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<OptimizeError>() {
            return match e {
                OptimizeError::InfeasibleSpec(_) => 3,
                OptimizeError::InvalidAllocation(_) => 4,
                OptimizeError::PowerFlow(pf) if non_convergence(pf) => 2,
                _ => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<PowerFlowError>() {
            if non_convergence(e) {
                return 2;
            }
        }
    }
    1
}

fn non_convergence(e: &PowerFlowError) -> bool {
    matches!(e, PowerFlowError::NotConverged { .. } | PowerFlowError::VoltageCollapse { .. })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<()> {
        let config = cli.global.resolve()?;
        match &cli.command {
            Command::Powerflow => commands::powerflow(&config),
            Command::Fit => commands::fit(&config),
            Command::Optimize => commands::optimize(&config, cli.global.threads),
            Command::Evaluate { allocation_file } => commands::evaluate(&config, allocation_file),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
