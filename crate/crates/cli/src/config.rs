//! Command arguments. Every field is optional so the same struct doubles as
//! a table in the config file; flags win over file values, and defaults are
//! applied last by the command itself.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

macro_rules! mergeable {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Fills every unset flag from `file`.
            pub fn merge(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Clips per motion class.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Output directory for frames and manifest.tsv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
}
mergeable!(SynthArgs {
    seed,
    per_class,
    out,
    frames,
    height,
    width
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory receiving kernels.bin, head.bin, train_log.csv and
    /// train_report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Number of convolution kernels.
    #[arg(long)]
    pub kernels: Option<usize>,
    #[arg(long)]
    pub kernel_h: Option<usize>,
    #[arg(long)]
    pub kernel_w: Option<usize>,
    #[arg(long)]
    pub kernel_t: Option<usize>,
}
mergeable!(TrainArgs {
    manifest,
    out,
    seed,
    epochs,
    batch_size,
    lr,
    beta1,
    beta2,
    eps,
    frames,
    height,
    width,
    kernels,
    kernel_h,
    kernel_w,
    kernel_t,
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Kernel bank written by `train`.
    #[arg(long)]
    pub kernels: Option<PathBuf>,
    #[arg(long)]
    pub head: Option<PathBuf>,
    /// digital or hybrid
    #[arg(long)]
    pub mode: Option<String>,
    /// train, validation, test or all
    #[arg(long)]
    pub split: Option<String>,
    /// Directory receiving eval_report.json and confusion.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the subtracted feature maps of the first clip here as PGMs.
    #[arg(long)]
    pub dump_maps: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Start from the ideal optics (no quantization) instead of the 8-bit
    /// modulator.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ideal: Option<bool>,
    /// ideal or physical
    #[arg(long)]
    pub pulse: Option<String>,
    #[arg(long)]
    pub pulse_radius: Option<f64>,
    /// Inhomogeneous broadening, rad/s.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Coherence lifetime in seconds.
    #[arg(long)]
    pub coherence_lifetime: Option<f64>,
    /// Modulator levels, 0 disables quantization.
    #[arg(long)]
    pub slm_levels: Option<u32>,
    #[arg(long)]
    pub guard_px: Option<usize>,
    #[arg(long)]
    pub canvas_h: Option<usize>,
    #[arg(long)]
    pub canvas_w: Option<usize>,
    /// Explicit modulator layout as JSON, bypassing the planner.
    #[arg(long)]
    pub layout: Option<PathBuf>,
}
mergeable!(EvalArgs {
    manifest,
    kernels,
    head,
    mode,
    split,
    out,
    dump_maps,
    frames,
    height,
    width,
    ideal,
    pulse,
    pulse_radius,
    bandwidth,
    coherence_lifetime,
    slm_levels,
    guard_px,
    canvas_h,
    canvas_w,
    layout,
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanArgs {
    /// Query duration.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Segment (coherence window) duration.
    #[arg(long)]
    pub t2: Option<f64>,
    /// Database duration.
    #[arg(long)]
    pub t3: Option<f64>,
    /// Inhomogeneous broadening, rad/s.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub device_fps: Option<f64>,
    #[arg(long)]
    pub digital_fps: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(PlanArgs {
    t1,
    t2,
    t3,
    bandwidth,
    device_fps,
    digital_fps,
    out
});

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthArgs,
    pub train: TrainArgs,
    pub eval: EvalArgs,
    pub plan: PlanArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Unset required value.
pub fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("missing --{}", name.replace('_', "-"))))
}
