mod commands;
mod report;
mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Safety analysis of synchronous failure models.
///
/// Exit codes: 0 success, 1 model or analysis error (including invalid
/// arguments), 2 I/O error, 3 state cap exceeded.
#[derive(Debug, Parser)]
#[command(name = "synsafe", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Maximum number of composed states.
    #[arg(long, global = true, default_value_t = synsafe_core::model::DEFAULT_STATE_CAP)]
    pub state_cap: usize,

    /// Add wall-clock `runtime_ms` to reports (they are then no longer
    /// reproducible byte for byte).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a model.
    Validate { model: PathBuf },
    /// Minimal critical sets of failure modes.
    Dcca {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = OccurrenceArg::Current)]
        occurrence: OccurrenceArg,
    },
    /// Probability of reaching the hazard within the horizon.
    Hazard {
        model: PathBuf,
        #[command(flatten)]
        horizon: HorizonArgs,
        /// Maximize over nondeterministic choices (MDP semantics).
        #[arg(long)]
        max: bool,
        /// Also write the hazard curve every STRIDE steps as CSV.
        #[arg(long, value_name = "STRIDE", requires = "curve_file")]
        curve: Option<u64>,
        #[arg(long, value_name = "PATH")]
        curve_file: Option<PathBuf>,
    },
    /// Fault-tree style upper estimate from the minimal critical sets.
    FtaBound {
        model: PathBuf,
        #[command(flatten)]
        horizon: HorizonArgs,
        /// Horizon probability for a per-demand mode, NAME=P.
        #[arg(long = "demand", value_name = "NAME=P", value_parser = units::parse_assignment)]
        demands: Vec<(String, f64)>,
        /// Use the per-demand probability itself where no bound is given.
        #[arg(long)]
        demand_default: bool,
        /// Also compute the model-checked hazard probability.
        #[arg(long)]
        model_check: bool,
    },
    /// Error of the geometric discretization of an exponential failure law.
    ApproxError {
        /// Failure rate, e.g. `1e-2/h`.
        #[arg(long, default_value = "1e-2/h", value_parser = units::parse_rate)]
        rate: f64,
        /// Time step, e.g. `1s` or `10ms`.
        #[arg(long, default_value = "1s", value_parser = units::parse_duration)]
        dt: f64,
        /// Evaluate at these times (hours) instead of a sweep.
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 500.0)]
        to: f64,
        #[arg(long, default_value_t = 10.0)]
        step: f64,
    },
    /// Monte Carlo estimate of the hazard probability.
    Simulate {
        model: PathBuf,
        #[command(flatten)]
        horizon: HorizonArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OccurrenceArg {
    Current,
    Ever,
}

/// The horizon as a step count or a duration. Without either, the model's
/// `horizon` constant is used.
#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct HorizonArgs {
    #[arg(short = 'k', long = "steps")]
    pub steps: Option<u64>,
    /// Duration such as `1h`; must be a multiple of the model's time step.
    #[arg(long, value_parser = units::parse_duration)]
    pub time: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
