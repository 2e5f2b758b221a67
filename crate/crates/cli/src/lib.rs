//! Command-line front end: `train`, `predict`, `evaluate` and `gradcheck`.
//!
//! Exit codes: 0 success, 1 failed gradient check or internal error,
//! 2 malformed or missing input, 3 invalid configuration, 4 ontology does not
//! match the checkpoint.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hiertype::PartialPathMode;

mod commands;

pub use commands::{cmd_evaluate, cmd_gradcheck, cmd_predict, cmd_train, PredictionRecord};

#[derive(Debug, Parser)]
#[command(name = "hiertype", version, about = "Hierarchical entity typing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint plus a JSON-lines epoch log.
    Train(TrainArgs),
    /// Decode types for every record of a JSONL file.
    Predict(PredictArgs),
    /// Score predicted label sets against gold.
    Evaluate(EvaluateArgs),
    /// Compare analytic and finite-difference gradients on a tiny random model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exclusive,
    Undefined,
}

impl From<ModeArg> for PartialPathMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exclusive => PartialPathMode::Exclusive,
            ModeArg::Undefined => PartialPathMode::Undefined,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// JSON object whose keys are hyperparameter names.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, visible_alias = "out")]
    pub checkpoint: PathBuf,
    /// Epoch log; defaults to the checkpoint path with a `.log.jsonl` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Overrides `mode` from the config.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TSV token-vector table.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Use hashed token vectors of this dimension (testing aid).
    #[arg(long)]
    pub hashed_dim: Option<usize>,
    /// Record wall-clock time per epoch in the log.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Output JSONL; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep OTHER nodes in the output.
    #[arg(long)]
    pub keep_synthetic: bool,
    /// Branching factors, e.g. `2,1,1`; defaults to the checkpoint's.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub hashed_dim: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long, value_enum, default_value = "exclusive")]
    pub mode: ModeArg,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `d_w,d_h,d_t`
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "6,8,8")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Scale the analytic gradient of one block (negative control).
    #[arg(long, hide = true)]
    pub corrupt: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hiertype::Error),
    #[error("{0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hiertype::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Input { .. } | E::MalformedPath { .. } | E::UnknownType(_) | E::Json(_) | E::Checkpoint(_) => 2,
                E::Config(_) => 3,
                E::OntologyMismatch { .. } => 4,
                _ => 1,
            },
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
