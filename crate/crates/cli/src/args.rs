use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use exposalign::CoderKind;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "EXPOSALIGN_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "exposalign", version, about = "Align differently exposed photographs of one scene")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align one or more slaves to a reference image.
    Align(AlignArgs),
    /// Write the intensity-normalized versions of an exposure pair.
    Normalize(PairArgs),
    /// Dump the intensity mapping functions and saturation thresholds of a pair.
    Imf(PairArgs),
    /// Make a rotated, shifted and re-exposed test image with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Compare the motions in run reports against ground-truth sidecars.
    Eval(EvalArgs),
    /// Write the binary codes of an image.
    Codes(CodesArgs),
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(short, long = "out", env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub reference: PathBuf,
    #[arg(required = true)]
    pub slaves: Vec<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
    /// Reuse the configuration echoed in an earlier report.
    #[arg(long, value_name = "REPORT", conflicts_with_all = ["coder", "levels", "max_iters", "sigma", "alpha", "beta", "no_init", "no_imf"])]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub coder: Option<CoderKind>,
    /// Maximum number of pyramid levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Iteration cap per pyramid level.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Smoothing applied before coding.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Dark saturation level.
    #[arg(long)]
    pub alpha: Option<u8>,
    /// Bright saturation level.
    #[arg(long)]
    pub beta: Option<u8>,
    /// Skip the projection-profile translation seed.
    #[arg(long)]
    pub no_init: bool,
    /// Code the raw images without intensity normalization.
    #[arg(long)]
    pub no_imf: bool,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long, default_value_t = exposalign::imf::DEFAULT_ALPHA)]
    pub alpha: u8,
    #[arg(long, default_value_t = exposalign::imf::DEFAULT_BETA)]
    pub beta: u8,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Source image; a procedural scene is generated when omitted.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
    /// Rotation in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ty: f64,
    /// Exposure change in stops.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ev: f64,
    /// Seed of the procedural scene.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Directory holding `<slave stem>.truth` sidecars; defaults to next to each slave.
    #[arg(long)]
    pub truth_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CodesArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long, default_value = "lbp")]
    pub coder: CoderKind,
    /// Smoothing applied before coding.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Also write every bit plane as a black and white image.
    #[arg(long)]
    pub planes: bool,
}
