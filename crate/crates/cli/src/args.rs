use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Environment variable that supplies `--out` when the flag is absent.
pub const OUT_ENV: &str = "IRISQ_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "irisq",
    version,
    about = "Recognition-oriented iris image quality assessment"
)]
pub struct Cli {
    /// Worker threads for per-image work and per-sample gradients.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic dataset (images, masks, manifest).
    Synth(SynthArgs),
    /// Fill in dfs_label for every record.
    Label(LabelArgs),
    /// Compute the hand-crafted quality factors of every record.
    Factors(FactorsArgs),
    /// Train the quality predictor.
    Train(TrainArgs),
    /// Fill in predicted_quality for every record.
    Predict(PredictArgs),
    /// Compute the IRR-EER curve of one quality field.
    Eval(EvalArgs),
    /// Correlation and EER@IRR tables for several quality fields.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// TOML generator config; omitted fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output manifest.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FactorsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output CSV.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Labelled training manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// TOML with optional `[model]` and `[train]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long = "out-checkpoint", alias = "out", env = OUT_ENV)]
    pub out_checkpoint: PathBuf,
    /// Per-epoch loss log; defaults to the checkpoint path with `.loss.csv`.
    #[arg(long)]
    pub out_log: Option<PathBuf>,
    /// Overrides the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output manifest.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    /// Band gate for hand-crafted factors, lower tail otherwise.
    Auto,
    LowerTail,
    Band,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// dfs_label, predicted_quality or a factor name.
    #[arg(long)]
    pub quality_field: String,
    /// Number of IRR targets k/steps.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = GateKind::Auto)]
    pub gate: GateKind,
    /// Manifest whose mean factor value centres band gates; defaults to
    /// `--manifest`.
    #[arg(long)]
    pub train_manifest: Option<PathBuf>,
    /// Output curve CSV.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated quality fields.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "predicted_quality,sharpness,iris_size,dilation,gray_level_spread,usable_area"
    )]
    pub quality_fields: Vec<String>,
    /// Manifest whose mean factor values centre band gates; defaults to
    /// `--manifest`.
    #[arg(long)]
    pub train_manifest: Option<PathBuf>,
    /// Output directory for the tables.
    #[arg(long, env = OUT_ENV)]
    pub out: PathBuf,
}
