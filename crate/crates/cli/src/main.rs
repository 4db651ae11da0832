//! `streamclust` command-line driver.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use streamclust::streamgen::BinningRule;
use streamclust::summary::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "streamclust", version, about = "Incremental clustering of chunked data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stream (sdwcd, sdccl, 100ncd, 1000wcd, or a JSON spec file).
    Gen(GenArgs),
    /// Normalize and split a labeled dataset into a chunked stream.
    Chunk(ChunkArgs),
    /// Run the engine over a stream and write metrics.
    Run(RunArgs),
    /// Compare final centroids of a run against the stream's true cluster values.
    Eval(EvalArgs),
    /// Continue a run from an engine snapshot.
    Resume(ResumeArgs),
}

#[derive(Args)]
pub struct GenArgs {
    /// Preset name or path to a stream spec JSON file.
    pub spec: String,
    /// Generator seed; overrides the seed of a spec file when given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Binning {
    EqualFrequency,
    EqualWidth,
}

impl From<Binning> for BinningRule {
    fn from(b: Binning) -> Self {
        match b {
            Binning::EqualFrequency => BinningRule::EqualFrequency,
            Binning::EqualWidth => BinningRule::EqualWidth,
        }
    }
}

#[derive(Args)]
pub struct ChunkArgs {
    /// Delimited file; the last column is the class.
    pub dataset: PathBuf,
    #[arg(long)]
    pub chunks: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep attribute values as read instead of min-max scaling them.
    #[arg(long)]
    pub no_normalize: bool,
    /// Add one binned class column per attribute.
    #[arg(long)]
    pub artificial_classes: bool,
    /// Number of bins; defaults to the number of classes.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value = "equal-frequency")]
    pub binning: Binning,
    /// Accept classes with fewer records than chunks.
    #[arg(long)]
    pub allow_small_classes: bool,
    /// Stream name; defaults to the dataset file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Clone)]
pub struct EngineArgs {
    /// Fixed number of clusters; by default each chunk's label count is used.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub o_thresh: Option<f64>,
    /// Defaults to 0.6 for synthetic streams and 0.4 for real-world ones.
    #[arg(long)]
    pub d_thresh: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Independent runs with seeds seed, seed+1, ...; metrics are averaged.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Write an engine snapshot of the first run after the last processed chunk.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Stop after the chunk with this timestamp.
    #[arg(long)]
    pub stop_at: Option<u64>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Metrics file written by `run` or `resume`.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args)]
pub struct ResumeArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub stop_at: Option<u64>,
    /// Write a new snapshot after the last processed chunk.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Chunk(a) => commands::chunk(a),
        Command::Run(a) => commands::run(a),
        Command::Eval(a) => commands::eval(a),
        Command::Resume(a) => commands::resume(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
