use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fpsolve_cli::commands;
use fpsolve_cli::{CliError, ExperimentConfig};

/// Stationary Fokker-Planck solvers driven by Monte Carlo reference data.
#[derive(Parser)]
#[command(name = "fpsolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the root seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Draw collocation points.
    Sample,
    /// Estimate reference densities.
    Density,
    /// Smooth a noisy grid density with the discrete operator.
    GridSolve,
    /// Train the network solver.
    Train,
    /// Evaluate a trained checkpoint on a grid or slice.
    Eval,
    /// Spectral diagnostic Q(h) over a sequence of grids.
    Qh,
    /// Error-reduction ratio of the penalized solver over a sequence of grids.
    Thm1,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Sample => commands::sample(&cfg, out),
        Command::Density => commands::density(&cfg, out),
        Command::GridSolve => commands::grid_solve(&cfg, out),
        Command::Train => commands::train(&cfg, out),
        Command::Eval => commands::eval(&cfg, out),
        Command::Qh => commands::qh(&cfg, out),
        Command::Thm1 => commands::thm1(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
