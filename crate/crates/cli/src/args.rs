//! Command-line flags and the optional TOML config file.
//!
//! Every flag can also be given in the config file: global flags at the top
//! level, subcommand flags in a table named after the subcommand, with
//! dashes replaced by underscores. Flags on the command line win.
//!
//! ```toml
//! seed = 7
//!
//! [synth]
//! n_objects = 20
//! temperature_range = [1.0, 1.0]
//!
//! [train]
//! lr = 0.001
//! l2 = 0.002
//! ```

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "plrank",
    version,
    about = "Plackett-Luce distributions from ranking labels"
)]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress informational messages.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-labeller dataset and its ground truth.
    Synth(SynthArgs),
    /// Fit one Plackett-Luce distribution to all rankings in a dataset.
    Fit(FitArgs),
    /// Train a ranker on a dataset and save the model.
    Train(TrainArgs),
    /// Predict a distribution and ranking for every instance of a dataset.
    Predict(PredictArgs),
    /// Score predictions against reference rankings.
    Evaluate(EvaluateArgs),
    /// Sample rankings from a Plackett-Luce distribution.
    Sample(SampleArgs),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub quiet: Option<bool>,
    pub output: Option<PathBuf>,
    pub synth: SynthArgs,
    pub fit: FitArgs,
    pub train: TrainArgs,
    pub predict: PredictArgs,
    pub evaluate: EvaluateArgs,
    pub sample: SampleArgs,
}

/// Fills every unset field of `self` from `file`.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! mergeable {
    ($name:ident { $($field:ident),* $(,)? }) => {
        impl Merge for $name {
            fn merge(self, file: Self) -> Self {
                $name { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    /// Dataset file to write; the ground truth goes to `<out>.truth.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Start from the low-noise preset (unit temperatures, no labeller bias).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub low_noise: Option<bool>,
    #[arg(long)]
    pub n_classes: Option<usize>,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long)]
    pub n_objects: Option<usize>,
    #[arg(long)]
    pub orientations: Option<usize>,
    #[arg(long)]
    pub n_labellers: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub coverage: Option<f64>,
    /// Labeller temperature range as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub temperature_range: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub bias_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub feature_noise: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub orientation_spread: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub score_scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bias_spread: Option<f64>,
    /// Comma-separated class names (defaults to the grasp types for 5 classes).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
}

mergeable!(SynthArgs {
    out,
    low_noise,
    n_classes,
    input_dim,
    n_objects,
    orientations,
    n_labellers,
    coverage,
    temperature_range,
    bias_scale,
    feature_noise,
    orientation_spread,
    score_scale,
    bias_spread,
    labels,
});

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// `mm` or `gradient`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub smoothing: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub learning_rate: Option<f64>,
}

mergeable!(FitArgs {
    data,
    method,
    max_iters,
    tolerance,
    smoothing,
    learning_rate
});

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// `linear` or `mlp1`.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

mergeable!(TrainArgs {
    train,
    test,
    arch,
    hidden_dim,
    lr,
    l2,
    epochs,
    batch_size,
    init_scale,
    model_out,
});

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

mergeable!(PredictArgs { model, data });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// `pair` (default) or `instance`.
    #[arg(long)]
    pub mode: Option<String>,
}

mergeable!(EvaluateArgs {
    predictions,
    references,
    mode
});

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleArgs {
    /// Comma-separated positive weights; normalized by their sum.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
}

mergeable!(SampleArgs {
    weights,
    count,
    labels
});
