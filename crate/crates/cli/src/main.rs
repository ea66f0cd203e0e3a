//! `udyn`: reproducible experiments on the undecided-state dynamics.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use udyn_core::report::Format;

/// Exit status when a requested assertion fails.
const EXIT_ASSERTION: u8 = 1;
/// Exit status for invalid input or runtime errors (clap uses it for usage errors too).
const EXIT_ERROR: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "udyn", version, about = "Simulate and analyse the two-color undecided-state dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed; the UDYN_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Multiplier of sqrt(n ln n) in the low/high bias threshold.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Output file (written atomically); stdout if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Worker threads for parallel trials (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One trajectory with the region of every round.
    Simulate(commands::SimulateArgs),
    /// Sample means of one step against the closed-form expectations.
    Expectations(commands::ExpectationsArgs),
    /// Region-transition audit over many trajectories.
    Phases(commands::PhasesArgs),
    /// Absorption-time statistics over a list of population sizes.
    Scaling(commands::ScalingArgs),
    /// Validate one claim, or all high-probability claims.
    Claims(commands::ClaimsArgs),
    /// How often the initial minority wins from a sqrt(n) bias.
    Minority(commands::MinorityArgs),
    /// Rounds a moderately biased start spends in H4.
    Lowerbound(commands::LowerboundArgs),
    /// Rounds until |s| first reaches sqrt(n ln n).
    Symbreak(commands::SymbreakArgs),
    /// Exact kernel and absorption probabilities for small n.
    Exact(commands::ExactArgs),
    /// Random regular graphs: spectral value, mixing lemma, node-level runs.
    Graph(commands::GraphArgs),
    /// Chernoff bounds against sampled binomial tails.
    Bounds(commands::BoundsArgs),
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Ok(v) = std::env::var("UDYN_SEED") {
        match v.trim().parse() {
            Ok(seed) => cli.global.seed = seed,
            Err(_) => {
                eprintln!("error: UDYN_SEED={v:?} is not an unsigned 64-bit integer");
                return ExitCode::from(EXIT_ERROR);
            }
        }
    }
    if let Some(w) = cli.global.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match commands::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
