use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use commands::{MinimaxMode, ValidateRequest};
use config::{usage, ConfigFile, ExperimentConfig, RawExperiment, UsageError};

#[derive(Parser)]
#[command(name = "ucal", version, about = "Online U-calibration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play repeated games and write one regret row per (trial, loss).
    Run(ExperimentArgs),
    /// Like `run`, over a geometric grid of horizons ending at --T.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Smallest horizon in the grid.
        #[arg(long, default_value_t = 16)]
        t_min: usize,
        /// Ratio between consecutive horizons.
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
    },
    /// Value of the two-outcome squared-loss minimax game.
    Minimax {
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = MinimaxMode::Both)]
        mode: MinimaxMode,
        /// Check the sandwich bounds on a_r and the value lower bound.
        #[arg(long)]
        check_bounds: bool,
        /// Write r,u_r,v_r,a_r,upper_bound,lower_bound rows here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Numerical properness, concavity, range and Lipschitz checks for one loss.
    Validate {
        /// Loss name (vshaped, squared, spherical, tsallis) or a full loss spec.
        #[arg(long)]
        loss: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long = "K", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    /// ftl, ftpl, ftpl-uniform or static:p1,p2,...
    #[arg(long)]
    forecaster: Option<String>,
    /// alternating, iid, fixed:PATH or greedy:LOSS
    #[arg(long)]
    adversary: Option<String>,
    /// vshaped, squared[:s], spherical, tsallis:a or mixture:w:first/second; repeatable
    #[arg(long = "loss", value_delimiter = ',')]
    losses: Vec<String>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(self, default_experiment: &str) -> anyhow::Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let raw = RawExperiment {
            experiment: self.experiment,
            forecaster: self.forecaster,
            adversary: self.adversary,
            losses: self.losses,
            k: self.k,
            horizon: self.horizon,
            trials: self.trials,
            seed: self.seed,
            output: self.output,
        };
        ExperimentConfig::resolve(raw, &file, default_experiment)
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("UCAL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("UCAL_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Run(args) => commands::run(&args.resolve("run")?),
        Command::Sweep { experiment, t_min, factor } => commands::sweep(&experiment.resolve("sweep")?, t_min, factor),
        Command::Minimax { horizon, mode, check_bounds, output } => {
            commands::minimax(horizon, mode, check_bounds, output.as_deref())
        }
        Command::Validate { loss, alpha, scale, k, seed } => {
            commands::validate(&ValidateRequest { loss, alpha, scale, k, seed })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
