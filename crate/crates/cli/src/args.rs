use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gazenav", version, about = "Gaze-decoded goal selection driving a simulated wheelchair")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Generate a labeled gaze dataset (JSONL).
    Synth(SynthArgs),
    /// Train one classifier per object from a dataset.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation per object.
    Cv(CvArgs),
    /// One scripted headless run.
    Run(RunArgs),
    /// Every run of a scenario pack, aggregated per family.
    Bench(BenchArgs),
    /// Re-derive a run's metrics from its event log.
    Replay(ReplayArgs),
    /// Live session over a websocket at /ws.
    Serve(ServeArgs),
    /// Write the standard scenario pack.
    Pack(PackArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Knn,
    Svm,
}

/// Classifier choice; SVM knobs are rejected for KNN and vice versa.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Kind::Knn)]
    pub kind: Kind,
    /// Neighbours (knn; default 10).
    #[arg(long)]
    pub k: Option<usize>,
    /// Box constraint (svm; default 1).
    #[arg(long)]
    pub c: Option<f64>,
    /// Gaussian kernel scale (svm; default √2/4).
    #[arg(long)]
    pub kernel_scale: Option<f64>,
    /// KKT tolerance (svm; default 1e-3).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Comma-separated object labels.
    #[arg(long, value_delimiter = ',', default_values_t = ["tv".to_string(), "laptop".to_string(), "chair".to_string()])]
    pub objects: Vec<String>,
    /// Gaze generator parameters (JSON); built-in defaults otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub subjects: u32,
    #[arg(long, default_value_t = 13)]
    pub trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory; one `<object>.json` per object.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub script: PathBuf,
    /// Directory of model files; KNN trained on default synthetic data otherwise.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Run seed; the scenario's `rng_seed` otherwise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the fallback models (only without --models).
    #[arg(long)]
    pub model_seed: Option<u64>,
    /// Simulation parameters (JSON); defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event log (JSONL).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Pack directory; the built-in standard pack otherwise.
    #[arg(long)]
    pub pack: Option<PathBuf>,
    /// Seeds per family.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub model_seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub model_seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PackArgs {
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long)]
    pub out: PathBuf,
}
