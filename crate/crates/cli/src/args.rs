use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "syncap",
    version,
    about = "Exact, series and Monte Carlo tools for the binary random-insertion channel",
    after_help = "Exit codes: 0 success, 1 usage error, 2 non-convergence, 3 guard violation, 4 replay mismatch.\n\
                  SYNCAP_GUARD_N raises the exhaustive-enumeration guard (expert use only)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Series constants (G1, A1, E[log L0]) and the small-alpha capacity expansion.
    Series(SeriesArgs),
    /// Exact transition probability P(y | x), or the whole output law of x.
    Law(LawArgs),
    /// Exact mutual information and its entropy decomposition.
    Mi(MiArgs),
    /// Blahut-Arimoto capacity C_n with a certified gap.
    Ba(BaArgs),
    /// Seeded Monte Carlo check of one per-term constant.
    Mc(McArgs),
    /// Alpha-grid sweep writing CSV and JSON artifacts.
    Sweep(SweepArgs),
    /// Re-run a persisted record and compare its results.
    Replay(ReplayArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Root seed for randomized steps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the run record as JSON.
    #[arg(long)]
    pub json: bool,
    /// Results directory; records are appended to <out>/runs.jsonl.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key=value file supplying defaults for unset flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SeriesArgs {
    /// Series truncation point.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Insertion probabilities at which to evaluate the expansion.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct LawArgs {
    /// Input word, e.g. 0110.
    #[arg(long)]
    pub x: Option<String>,
    /// Output word; omit to list the full output law.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct MiArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// i.i.d. Bernoulli input with P(1) = p (default 0.5).
    #[arg(long, conflicts_with = "markov")]
    pub iid: Option<f64>,
    /// Stationary Markov input with transition probabilities p01,p10.
    #[arg(long, value_delimiter = ',')]
    pub markov: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BaArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Block gap tolerance in bits.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Per-symbol entropy of the insertion pairs.
    Ab,
    /// Relative excess output length.
    Length,
    /// Reversed-atom frequencies of the modified process.
    Zv,
    /// Boundary-ambiguity constant A1.
    Ambiguity,
    /// Length-biased E[log2 L0].
    LogRun,
    /// Flip density of run truncation at --L.
    Flips,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Run-length cap for the flips estimator.
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Strictly increasing grid in (0, 1).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Blocklengths for the exact and Blahut-Arimoto columns.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Vec<usize>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Monte Carlo trials per alpha; 0 skips the checks.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Monte Carlo blocklength.
    #[arg(long)]
    pub mc_n: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// JSON-lines file of run records.
    #[arg(long)]
    pub record: PathBuf,
    /// 1-based line to replay (default: last).
    #[arg(long)]
    pub line: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}
