use std::path::PathBuf;
use std::process::ExitCode;

use bnr_cli::commands;
use bnr_cli::config::{load_toml, RunConfig};
use bnr_cli::error::{CliError, Result};
use bnr_core::simgen::SimConfig;
use clap::{Parser, Subcommand};

/// Bayesian network regression: simulate, fit and evaluate.
#[derive(Parser)]
#[command(name = "bnr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with its truth sidecar.
    Simulate {
        /// TOML file of simulation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the Gibbs sampler and write draws, diagnostics and summaries.
    Fit {
        /// TOML file of run settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long)]
        retained: Option<usize>,
        #[arg(long)]
        rhat_threshold: Option<f64>,
    },
    /// Score a fitted run against the truth of a simulated dataset.
    Evaluate {
        /// Output directory of `fit`.
        #[arg(long)]
        run: PathBuf,
        /// Truth sidecar written by `simulate`.
        #[arg(long)]
        truth: PathBuf,
        /// Dataset directory, if it moved since the fit.
        #[arg(long)]
        data: Option<PathBuf>,
        /// CSV file for the result row.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute convergence diagnostics of a fitted run.
    Diagnose {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        rhat_threshold: Option<f64>,
        /// Directory for convergence.csv and convergence.txt.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, output } => {
            let mut cfg: SimConfig = match config {
                Some(path) => load_toml(&path)?,
                None => SimConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (data, _) = commands::simulate(&cfg, &output)?;
            println!("wrote {} samples over {} nodes to {}", data.n(), data.v(), output.display());
            Ok(())
        }
        Command::Fit {
            config,
            data,
            output,
            seed,
            chains,
            burn_in,
            retained,
            rhat_threshold,
        } => {
            let mut cfg: RunConfig = match config {
                Some(path) => load_toml(&path)?,
                None => RunConfig::default(),
            };
            cfg.data = data.or(cfg.data);
            cfg.output = output.or(cfg.output);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.chains = chains.unwrap_or(cfg.chains);
            cfg.burn_in = burn_in.unwrap_or(cfg.burn_in);
            cfg.max_burn_in = cfg.max_burn_in.max(cfg.burn_in);
            cfg.retained = retained.unwrap_or(cfg.retained);
            cfg.rhat_threshold = rhat_threshold.unwrap_or(cfg.rhat_threshold);
            let outcome = commands::fit(&cfg)?;
            println!(
                "wrote {} (max R-hat {:.4}, burn-in {})",
                outcome.output.display(),
                outcome.max_rhat,
                outcome.burn_in_used
            );
            outcome.status(cfg.rhat_threshold)
        }
        Command::Evaluate { run, truth, data, output } => {
            let row = commands::evaluate(&run, &truth, data.as_deref(), output.as_deref())?;
            let show = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.4}"));
            println!(
                "edge FPR {} FNR {}; node FPR {} FNR {}; coefficient MSE {:.5}; response MSE {:.5}",
                show(row.edge_fpr),
                show(row.edge_fnr),
                show(row.node_fpr),
                show(row.node_fnr),
                row.coef_mse,
                row.response_mse
            );
            Ok(())
        }
        Command::Diagnose {
            run,
            rhat_threshold,
            output,
        } => {
            let report = commands::diagnose(&run, rhat_threshold, output.as_deref())?;
            if report.converged {
                Ok(())
            } else {
                Err(CliError::NotConverged {
                    max_rhat: report.max_rhat,
                    threshold: report.threshold,
                    burn_in: 0,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
