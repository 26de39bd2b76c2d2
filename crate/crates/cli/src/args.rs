//! Flag definitions for the `dsr` binary.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsr_core::clustering::Method;
use dsr_core::spectral::SignConvention;
use std::fmt;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "dsr", version, about = "Density-seeded superpixel segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment one image and write the requested artifacts.
    Segment(SegmentArgs),
    /// Sweep (image, method, k) cells over a dataset and report metrics.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    /// Regular-grid seeding, fixed 2S search window.
    Slic,
    /// Density-guided seeding, per-center search radius.
    Dsr,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Slic => Method::Slic,
            MethodArg::Dsr => Method::Dsr,
        }
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodArg::Slic => "slic",
            MethodArg::Dsr => "dsr",
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignArg {
    /// Positive exponent: density is high where saliency is high.
    Literal,
    /// Negated exponent: density is low where saliency is high.
    Inverted,
}

impl From<SignArg> for SignConvention {
    fn from(s: SignArg) -> SignConvention {
        match s {
            SignArg::Literal => SignConvention::Literal,
            SignArg::Inverted => SignConvention::Inverted,
        }
    }
}

impl fmt::Display for SignArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignArg::Literal => "literal",
            SignArg::Inverted => "inverted",
        })
    }
}

fn parse_downsample(s: &str) -> Result<u8, String> {
    match s {
        "1" => Ok(1),
        "2" => Ok(2),
        "4" => Ok(4),
        other => Err(format!("downsample factor {other} not in {{1, 2, 4}}")),
    }
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    /// Input image (8-bit PNG or PPM).
    #[arg(long)]
    pub input: PathBuf,

    /// Target superpixel count.
    #[arg(long)]
    pub superpixels: usize,

    /// Seeding and search strategy.
    #[arg(long, value_enum)]
    pub method: MethodArg,

    /// Compactness weight trading spatial against color proximity.
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,

    /// Saliency smoothing bandwidth.
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,

    /// Seed-hedging smoothing bandwidth.
    #[arg(long, default_value_t = 6.5)]
    pub tau: f64,

    /// Density sign convention.
    #[arg(long, value_enum, default_value_t = SignArg::Inverted)]
    pub density_sign: SignArg,

    /// Saliency downsample factor.
    #[arg(long, default_value_t = 1, value_parser = parse_downsample)]
    pub downsample: u8,

    /// Write the label map as a 16-bit grayscale PNG.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write the input image with superpixel boundaries recolored.
    #[arg(long)]
    pub overlay: Option<PathBuf>,

    /// Write the seed positions as a CSV of x,y rows.
    #[arg(long)]
    pub seeds: Option<PathBuf>,

    /// Write the density map as a normalized 8-bit grayscale PNG.
    #[arg(long)]
    pub density: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of input images, paired with ground truth by file stem.
    #[arg(long)]
    pub images: PathBuf,

    /// Directory of ground-truth files (`stem.seg` preferred, else
    /// `stem.png`).
    #[arg(long)]
    pub ground_truth: PathBuf,

    /// Superpixel counts to sweep.
    #[arg(
        long = "k",
        value_delimiter = ',',
        default_values_t = [100usize, 200, 300, 400, 500, 600],
    )]
    pub k_values: Vec<usize>,

    /// Methods to run.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [MethodArg::Slic, MethodArg::Dsr],
    )]
    pub methods: Vec<MethodArg>,

    /// Compactness weight trading spatial against color proximity.
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,

    /// Saliency smoothing bandwidth.
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,

    /// Seed-hedging smoothing bandwidth.
    #[arg(long, default_value_t = 6.5)]
    pub tau: f64,

    /// Density sign convention.
    #[arg(long, value_enum, default_value_t = SignArg::Inverted)]
    pub density_sign: SignArg,

    /// Saliency downsample factor.
    #[arg(long, default_value_t = 1, value_parser = parse_downsample)]
    pub downsample: u8,

    /// CSV report path.
    #[arg(long, default_value = "bench.csv")]
    pub out_csv: PathBuf,

    /// JSON report path.
    #[arg(long, default_value = "bench.json")]
    pub out_json: PathBuf,

    /// Worker threads (0 = one per core). The DSR_THREADS environment
    /// variable overrides this flag.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}
