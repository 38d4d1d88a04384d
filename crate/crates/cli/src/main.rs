//! `cotm`: dataset preparation, training, evaluation, inspection and the
//! oracle-equivalence check.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or format
//! error, 3 oracle divergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Divergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Divergence(m) => f.write_str(m),
        }
    }
}

impl From<cotm::Error> for CliError {
    fn from(e: cotm::Error) -> Self {
        match e {
            cotm::Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cotm", version, about = "Coalesced Tsetlin Machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the 2D noisy XOR train/test split as COTD files.
    GenerateXor(GenerateXorArgs),
    /// Convert IDX images or a labelled text corpus into a COTD dataset.
    Prepare {
        #[command(subcommand)]
        source: PrepareSource,
    },
    /// Drop training examples to create class imbalance.
    Subsample(SubsampleArgs),
    /// Train one model and write it with a per-epoch CSV.
    Train(TrainArgs),
    /// Score a model on a dataset; prints JSON.
    Eval(EvalArgs),
    /// Print the output bits predicted for every example.
    Predict(PredictArgs),
    /// List clauses as readable conjunctions, strongest first.
    Inspect(InspectArgs),
    /// Compare the engine with the dense reference on random instances.
    OracleCheck(OracleCheckArgs),
    /// Run the repeated-trial protocol.
    Trials(TrialsArgs),
}

#[derive(Args, Debug)]
pub struct GenerateXorArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 2500)]
    pub train: usize,
    #[arg(long, default_value_t = 10_000)]
    pub test: usize,
    /// Fraction of training labels to invert.
    #[arg(long, default_value_t = 0.4)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum PrepareSource {
    /// IDX image and label files, binarized by adaptive Gaussian thresholding.
    Image(PrepareImageArgs),
    /// Tab-separated `label<TAB>text` lines, as set-of-words features.
    Text(PrepareTextArgs),
}

#[derive(Args, Debug)]
pub struct PrepareImageArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 11)]
    pub window: usize,
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
    /// Number of classes; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PrepareTextArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub max_vocab: usize,
    /// Reuse an existing vocabulary instead of building one.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Where to write the vocabulary that was built.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    /// Comma-separated class names fixing the output order.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct SubsampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `CLASS:FRACTION`, e.g. `1:0.9`.
    #[arg(long, conflicts_with = "geometric", required_unless_present = "geometric")]
    pub remove_fraction: Option<String>,
    /// Classes from most to least frequent; rank r keeps 0.5^r.
    #[arg(long, value_delimiter = ',')]
    pub geometric: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Options shared by `train` and `trials`; each overrides the config file.
#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Flat key-value run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub clauses: Option<usize>,
    #[arg(long)]
    pub margin: Option<u32>,
    #[arg(long)]
    pub specificity: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub multiclass_scalar: Option<f64>,
    /// Use `1/(m−1)` as the multiclass scalar.
    #[arg(long)]
    pub one_hot: bool,
    /// Gate Type Ia feedback with probability (s−1)/s.
    #[arg(long)]
    pub no_boost: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Visit examples in storage order.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Fixed per-output clause partitions with frozen ±1 weights.
    #[arg(long)]
    pub vanilla: bool,
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScoreArg {
    Argmax,
    PerOutput,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrialsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Epochs averaged at the end of each trial.
    #[arg(long)]
    pub tail: Option<usize>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EmptyClauseArg {
    Paper,
    Zero,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output of clauses with no included literal at prediction time.
    #[arg(long, value_enum, default_value = "paper")]
    pub empty_clause: EmptyClauseArg,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "paper")]
    pub empty_clause: EmptyClauseArg,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub top: Option<usize>,
    /// Render literals with vocabulary words (requires --vocab).
    #[arg(long)]
    pub names: bool,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Distinct seeds cycled over the instances.
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true, value_enum)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FaultArg {
    Clip,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenerateXor(a) => commands::generate_xor(&a),
        Command::Prepare { source } => match source {
            PrepareSource::Image(a) => commands::prepare_image(&a),
            PrepareSource::Text(a) => commands::prepare_text(&a),
        },
        Command::Subsample(a) => commands::subsample(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Inspect(a) => commands::inspect(&a),
        Command::OracleCheck(a) => commands::oracle_check(&a),
        Command::Trials(a) => commands::trials(&a),
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
