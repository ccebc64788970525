//! flowsentry — flow-record intrusion detection from the command line.
//!
//! Subcommands: `inspect` (class distribution + feature correlations),
//! `train` (full preprocess/train/evaluate run), `grid` (the 8x3
//! optimizer/activation sweep), `eval` (score a saved model on new data),
//! `predict` (per-row probabilities, optionally ensembled).
//!
//! Exit codes are a stable contract: 0 success, 2 config/parse error,
//! 3 training abort, 4 schema mismatch.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flowsentry::flowdata::FlowDataError;
use flowsentry::modeling::ModelError;
use flowsentry::preprocess::PreprocessError;

#[derive(Debug)]
pub enum CliError {
    /// Configuration or input parsing problems (exit 2).
    Config(String),
    /// Training aborted on a non-finite loss (exit 3).
    TrainAbort(String),
    /// Model/data schema disagreement (exit 4).
    SchemaMismatch(String),
    /// Anything else (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::TrainAbort(_) => 3,
            CliError::SchemaMismatch(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::TrainAbort(m)
            | CliError::SchemaMismatch(m)
            | CliError::Other(m) => m,
        }
    }
}

impl From<FlowDataError> for CliError {
    fn from(e: FlowDataError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::SchemaMismatch(_) => CliError::SchemaMismatch(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFiniteLoss { .. } => CliError::TrainAbort(e.to_string()),
            ModelError::SchemaMismatch(_) => CliError::SchemaMismatch(e.to_string()),
            ModelError::Preprocess(PreprocessError::SchemaMismatch(m)) => {
                CliError::SchemaMismatch(m)
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<flowsentry::evaluation::EvalError> for CliError {
    fn from(e: flowsentry::evaluation::EvalError) -> Self {
        CliError::Other(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "flowsentry", version, about = "Flow-record intrusion detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report class distribution and feature/label correlations for CSVs.
    Inspect {
        /// Flow CSV files (repeatable).
        #[arg(long = "data", required = true)]
        data: Vec<PathBuf>,
        /// Output directory for distribution.csv / correlation.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Raw labels treated as benign (repeatable).
        #[arg(long = "benign-token")]
        benign_tokens: Vec<String>,
    },
    /// Preprocess, train, and evaluate one model end to end.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "data")]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Also run stratified k-fold cross-validation with this many folds.
        #[arg(long)]
        folds: Option<usize>,
        /// Keep only the top-k features by |correlation|.
        #[arg(long = "top-k-features")]
        top_k_features: Option<usize>,
        /// Disable SMOTE oversampling of the training split.
        #[arg(long = "no-smote", default_value_t = false)]
        no_smote: bool,
        /// Measure single-record inference latency on the test split.
        #[arg(long, default_value_t = false)]
        latency: bool,
    },
    /// Run the full optimizer/activation grid and emit grid.csv.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "data")]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Cells run on this many threads (1 = serial).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long = "top-k-features")]
        top_k_features: Option<usize>,
        #[arg(long = "no-smote", default_value_t = false)]
        no_smote: bool,
    },
    /// Evaluate a saved model on labeled data.
    Eval {
        /// Model artifact directory (or its manifest.json).
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "data", required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also measure single-record inference latency.
        #[arg(long, default_value_t = false)]
        latency: bool,
        #[arg(long = "benign-token")]
        benign_tokens: Vec<String>,
    },
    /// Stream per-row attack probabilities for a CSV (ensemble with
    /// repeated --model flags).
    Predict {
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("FLOWSENTRY_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inspect { data, out, benign_tokens } => {
            commands::inspect(&data, &out, &benign_tokens)
        }
        Command::Train {
            config,
            data,
            out,
            seed,
            threshold,
            folds,
            top_k_features,
            no_smote,
            latency,
        } => {
            let overrides = config::Overrides {
                data,
                out,
                seed,
                threshold,
                top_k_features,
                no_smote,
            };
            commands::train(&config, &overrides, folds, latency)
        }
        Command::Grid { config, data, out, seed, parallel, top_k_features, no_smote } => {
            let overrides = config::Overrides {
                data,
                out,
                seed,
                threshold: None,
                top_k_features,
                no_smote,
            };
            commands::grid(&config, &overrides, parallel)
        }
        Command::Eval { model, data, out, threshold, latency, benign_tokens } => {
            commands::eval(&model, &data, &out, threshold, latency, &benign_tokens)
        }
        Command::Predict { model, data, out, threshold } => {
            commands::predict(&model, &data, out.as_deref(), threshold)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
