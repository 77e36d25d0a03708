//! `heatsched`: reproducible experiments around optimal heat pump
//! scheduling with thermal storage.
//!
//! Exit codes: 0 success, 2 invalid input or configuration (also used by
//! argument parsing), 3 a solve found the day infeasible.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heatsched::model::TerminalMode;
use heatsched_cli::{commands, config};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "heatsched",
    about = "Optimal on/off heat pump schedules over thermal storage: \
             demand statistics, batch experiments, and schedule predictors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options every subcommand accepts.
#[derive(Args)]
struct Common {
    /// Experiment configuration JSON; omitted fields use defaults.
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// How the last hour meets the storage balance: an `open` day never
    /// tracks the final hour's effect on the store; a `closed` day steps
    /// the store through every hour and bounds the end-of-day stock.
    #[arg(long, value_name = "open|closed")]
    terminal_mode: Option<TerminalMode>,
}

impl Common {
    fn resolve(&self, fallback: Option<&std::path::Path>) -> Result<ExperimentConfig, heatsched::Error> {
        let mut config = match (&self.config, fallback) {
            (Some(path), _) => ExperimentConfig::from_file(path)?,
            (None, Some(path)) if path.exists() => ExperimentConfig::from_file(path)?,
            _ => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(mode) = self.terminal_mode {
            config.pump.terminal_mode = mode;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute demand statistics from a metering history CSV.
    Stats {
        /// CSV with header `date,hour,demand_kwh`.
        #[arg(long, value_name = "CSV")]
        history: PathBuf,
        /// Output directory for stats.json and rejects.csv.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample demand days, solve them all, and analyse the results.
    Pipeline {
        /// Output directory for the run's artifacts.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Number of days to sample, overriding the configuration file.
        #[arg(long)]
        n: Option<usize>,
        /// Statistics JSON to sample from, overriding the configuration.
        #[arg(long, value_name = "JSON")]
        stats: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train and compare schedule predictors on a pipeline run.
    Predict {
        /// Directory written by `pipeline`. Its echoed config supplies
        /// defaults when --config is not given.
        #[arg(long, value_name = "DIR")]
        pipeline_dir: PathBuf,
        /// Output directory for the leaderboard and model artifacts.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve a single day given as `{ "hd": [kWh per hour] }`.
    Solve {
        /// Demand JSON file.
        #[arg(long, value_name = "JSON")]
        demand: PathBuf,
        /// Optional output directory for solution.json.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<i32, heatsched::Error> {
    match cli.command {
        Command::Stats { history, out, common } => {
            // stats ignores sampling configuration, but accepts the
            // common flags so scripts can pass one flag set everywhere.
            let _ = common.resolve(None)?;
            commands::cmd_stats(&history, &out)?;
            Ok(0)
        }
        Command::Pipeline { out, n, stats, common } => {
            let mut config = common.resolve(None)?;
            if let Some(n) = n {
                config.samples = n;
            }
            if let Some(stats) = stats {
                config.stats = config::StatsSource::File { path: stats };
            }
            commands::cmd_pipeline(&config, &out)?;
            Ok(0)
        }
        Command::Predict { pipeline_dir, out, common } => {
            let echoed = pipeline_dir.join("config.json");
            let config = common.resolve(Some(&echoed))?;
            commands::cmd_predict(&pipeline_dir, &config, &out)?;
            Ok(0)
        }
        Command::Solve { demand, out, common } => {
            let config = common.resolve(None)?;
            commands::cmd_solve(&demand, &config, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
