use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cnni",
    version,
    about = "Near neighbor influence clustering toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (CSV with a label column) and its truth labels.
    Generate(GenerateArgs),
    /// Cluster a CSV dataset and report NC, ADM, purity and timing.
    Cluster(ClusterArgs),
    /// Estimate a δ interval from MST edge gaps or from truth labels.
    EstimateDelta(EstimateArgs),
    /// Quantize a 24-bit BMP by clustering its pixels in RGB space.
    CompressImage(CompressArgs),
    /// Write a synthetic 24-bit BMP test image.
    GenerateImage(GenerateImageArgs),
    /// Run an algorithm over a δ grid and report the valid intervals.
    Sweep(SweepArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Cnni,
    Icnni,
    Ecnni,
    Kmeans,
    Dbscan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Reciprocal,
    Exp,
    ExpScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Truncated,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mst,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Blob,
    Ring,
    Chain,
}

/// How CSV input is read.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Dataset CSV.
    pub input: PathBuf,
    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// `none`, `last`, a 1-based column number, or `auto` (last column when
    /// its header is label, class, target or truth).
    #[arg(long, default_value = "auto")]
    pub label_column: String,
    /// Rescale every attribute to [0, 1].
    #[arg(long)]
    pub normalize: bool,
}

/// Parameters shared by the CNNI family.
#[derive(Debug, Clone, Args)]
pub struct CnniArgs {
    #[arg(long, value_enum, default_value = "reciprocal")]
    pub kind: KindArg,
    /// Scale of the exp-scaled similarity; defaults to δ.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Share of neighbors that must be unassigned for a point to open a cluster.
    #[arg(long, default_value_t = 0.8)]
    pub many_fraction: f64,
    #[arg(long, value_enum, default_value = "truncated")]
    pub threshold: ThresholdArg,
    /// Opening a cluster leaves already-labeled neighbors alone.
    #[arg(long)]
    pub no_overwrite: bool,
    /// Grid cell length per axis for icnni: one value for all axes or a
    /// comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub cell: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// ds1..ds8 or data1..data6.
    #[arg(long)]
    pub preset: Option<String>,
    /// Total points; drawn patterns always have 300.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted clusters, when no preset is given.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub semidiameter: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "blob")]
    pub shape: ShapeArg,
    /// Dataset CSV to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Truth label file; defaults to the output path with a `.truth.txt` suffix.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub cnni: CnniArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_pts: Option<usize>,
    /// Label file to write, one label per line.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// CSV of index, coordinates and label.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// CSV report (header plus one row).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum, default_value = "mst")]
    pub method: MethodArg,
    #[command(flatten)]
    pub input: InputArgs,
    /// Estimate on a uniform random sample of this many points.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV report (header plus one row).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    /// 24-bit uncompressed BMP.
    pub input: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[command(flatten)]
    pub cnni: CnniArgs,
    /// Recolored BMP to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-pixel label file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// CSV report (header plus one row).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateImageArgs {
    #[arg(long, default_value_t = 200)]
    pub width: u32,
    #[arg(long, default_value_t = 200)]
    pub height: u32,
    /// Number of planted color bands; omit for a smooth gradient.
    #[arg(long)]
    pub colors: Option<usize>,
    /// Minimum RGB distance between planted colors.
    #[arg(long, default_value_t = 40.0)]
    pub separation: f64,
    /// Per-channel jitter of each pixel around its band color.
    #[arg(long, default_value_t = 2)]
    pub jitter: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Report the δ ranges producing exactly this many clusters.
    #[arg(long)]
    pub target_nc: Option<usize>,
    #[command(flatten)]
    pub cnni: CnniArgs,
    /// CSV of delta, nc, noise, adm.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
