use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qseg", version, about = "Instance segmentation through labeling transformations")]
pub struct Cli {
    /// Worker threads; images are processed in parallel, outputs do not depend on it.
    #[arg(long, global = true, env = "QSEG_JOBS", default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..=256))]
    pub jobs: u16,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a forward transform of ground-truth instance maps.
    Transform(TransformArgs),
    /// Rebuild instance maps from semantic maps and transform outputs.
    Reconstruct(ReconstructArgs),
    /// Score predicted instance maps against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate synthetic scenes.
    Synth(SynthArgs),
    /// Learn an affinity-pattern codebook.
    Codebook(CodebookArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    PixelAffinity,
    SpAffinity,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Colors {
    Rgb,
    Lab,
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and non-negative"))
    }
}

fn odd_patch(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    if v % 2 == 1 && v <= 15 {
        Ok(v)
    } else {
        Err(format!("patch size must be odd and at most 15, got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, env = "QSEG_METHOD")]
    pub method: Method,
    /// Scene directory, or one `*.inst.pgm` file.
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Codebook file (pixel-affinity).
    #[arg(long, env = "QSEG_CODEBOOK")]
    pub codebook: Option<PathBuf>,
    /// Side of the square working resolution (pixel-affinity).
    #[arg(long, env = "QSEG_SIZE", default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub size: u32,
    #[command(flatten)]
    pub slic: SlicArgs,
    /// Adjacency hops between labeled superpixel pairs (sp-affinity).
    #[arg(long, env = "QSEG_HOPS", default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub hops: u32,
    /// Chance of corrupting each class or pair label.
    #[arg(long, env = "QSEG_FLIP_RATE", default_value_t = 0.0, value_parser = probability)]
    pub flip_rate: f64,
    /// Gaussian blur applied to boundaries.
    #[arg(long, env = "QSEG_BLUR_SIGMA", default_value_t = 0.0, value_parser = non_negative)]
    pub blur_sigma: f64,
    /// Gaussian noise added to boundaries.
    #[arg(long, env = "QSEG_NOISE_SIGMA", default_value_t = 0.0, value_parser = non_negative)]
    pub noise_sigma: f64,
    #[arg(long, env = "QSEG_NOISE_SEED", default_value_t = 0)]
    pub noise_seed: u64,
}

#[derive(Debug, Args)]
pub struct SlicArgs {
    /// Target superpixel count.
    #[arg(long, env = "QSEG_SUPERPIXELS", default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pub superpixels: u32,
    #[arg(long, env = "QSEG_COMPACTNESS", default_value_t = 10.0, value_parser = non_negative)]
    pub compactness: f64,
    #[arg(long, env = "QSEG_SLIC_ITERATIONS", default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=1000))]
    pub slic_iterations: u32,
    #[arg(long, env = "QSEG_COLOR_SPACE", value_enum, default_value_t = Colors::Rgb)]
    pub color_space: Colors,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long, env = "QSEG_METHOD")]
    pub method: Method,
    /// Directory of `*.sem.pgm` semantic maps, or one such file.
    #[arg(long)]
    pub semantic: PathBuf,
    /// Directory holding the transform outputs.
    #[arg(long)]
    pub transforms: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "QSEG_CODEBOOK")]
    pub codebook: Option<PathBuf>,
    /// Accept K clusters while the normalized cut per cluster stays within tau.
    #[arg(long, env = "QSEG_TAU", default_value_t = 0.08, value_parser = non_negative)]
    pub tau: f64,
    #[arg(long, env = "QSEG_K_MAX", default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub k_max: u32,
    #[arg(long, env = "QSEG_CUT_SEED", default_value_t = 0)]
    pub cut_seed: u64,
    /// Soft boundaries below this value are dropped during thinning.
    #[arg(long, env = "QSEG_LOW_THRESHOLD", default_value_t = 0.1, value_parser = probability)]
    pub low_threshold: f64,
    /// Leave boundary pixels unlabeled instead of growing instances over them.
    #[arg(long)]
    pub no_reassign: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted `*.inst.pgm` maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth `*.inst.pgm` maps.
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction budgets for average recall.
    #[arg(long, env = "QSEG_AR", value_delimiter = ',', default_value = "10,100")]
    pub ar: Vec<usize>,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "QSEG_COUNT", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=100_000))]
    pub count: u32,
    /// Seed of the first scene; scene i uses seed + i.
    #[arg(long, env = "QSEG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub height: u32,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub width: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=255))]
    pub classes: u32,
    #[arg(long, default_value_t = 2)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 5)]
    pub max_instances: usize,
    #[arg(long, default_value_t = 10)]
    pub min_size: usize,
    #[arg(long, default_value_t = 22)]
    pub max_size: usize,
    #[arg(long, env = "QSEG_TOUCHING", default_value_t = 0.5, value_parser = probability)]
    pub touching: f64,
    #[arg(long, default_value_t = 6.0, value_parser = non_negative)]
    pub color_noise: f64,
    /// File name prefix of the scenes.
    #[arg(long, default_value = "scene")]
    pub prefix: String,
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    /// Directory of training `*.inst.pgm` maps.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Patch side k.
    #[arg(short = 'k', long, env = "QSEG_PATCH_SIZE", default_value_t = 5, value_parser = odd_patch)]
    pub patch_size: usize,
    /// Number of pattern classes C.
    #[arg(short = 'C', long, env = "QSEG_CLASS_COUNT", default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..=65535))]
    pub class_count: u32,
    /// Maps are resampled to this square size before training.
    #[arg(long, env = "QSEG_SIZE", default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..=4096))]
    pub size: u32,
    #[arg(long, env = "QSEG_SEED", default_value_t = 0)]
    pub seed: u64,
}
