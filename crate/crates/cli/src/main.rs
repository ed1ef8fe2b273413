mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

/// Virtual flow metering laboratory: synthetic choke data, gray-box models
/// and the experiment grid.
#[derive(Parser, Debug)]
#[command(name = "vfm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset file.
    GenData(GenDataArgs),
    /// Train one model on a dataset file.
    Train(TrainArgs),
    /// Run an experiment from a configuration file.
    RunExp(RunExpArgs),
    /// Re-aggregate an existing tidy results file.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetArg {
    D1,
    D2,
    D3,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub set: SetArg,
    /// Row count [default: 10000 for d1, 5000 for d2 and d3]
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise standard deviation of the observed flow (d1 only).
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file written by `gen-data`.
    #[arg(long)]
    pub data: PathBuf,
    /// M*, M, H-A, H-E or D.
    #[arg(long)]
    pub model: String,
    /// TOML file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,50")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_net: Option<f64>,
    #[arg(long)]
    pub lr_phys: Option<f64>,
    /// Noise scale of the likelihood [default: the dataset's σ, or 1 when noise-free]
    #[arg(long)]
    pub sigma_assumed: Option<f64>,
    /// Output directory for the checkpoint and loss curve.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunExpArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overrides the configured master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Tidy results file written by `run-exp`.
    #[arg(long)]
    pub tidy: PathBuf,
    /// Where to write the re-aggregated files [default: next to the tidy file]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::RunExp(a) => commands::run_exp(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}
