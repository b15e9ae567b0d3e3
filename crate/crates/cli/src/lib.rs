//! Command-line front end for `adaptmark`: embed, extract, attack and the
//! benchmark harness.

pub mod bench;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "adaptmark", version, about = "Adaptive blind image watermarking")]
pub struct Cli {
    /// JSON toolkit configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a 256-bit payload into a cover image.
    Embed(EmbedArgs),
    /// Blindly recover the payload from an image.
    Extract(ExtractArgs),
    /// Apply one attack to an image.
    Attack(AttackArgs),
    /// Run the robustness benchmark or the strength calibration.
    Bench(BenchArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct ParamOverrides {
    /// Use the fixed strength factor instead of the per-block one.
    #[arg(long)]
    pub non_adaptive: bool,
    #[arg(long, value_name = "SF")]
    pub fixed_sf: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Minimum coefficient magnitude of a marked pair.
    #[arg(long, value_name = "M0")]
    pub magnitude_floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Cover image (PNG or PGM).
    pub cover: PathBuf,
    /// Output image; the extension selects PNG or PGM.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Payload as 64 hex digits.
    #[arg(long, conflicts_with = "payload_file", required_unless_present = "payload_file")]
    pub payload: Option<String>,
    /// File holding the payload as hex text or 32 raw bytes.
    #[arg(long, value_name = "PATH")]
    pub payload_file: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamOverrides,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub params: ParamOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    None,
    Median,
    SaltPepper,
    Gaussian,
    HistEq,
    Jpeg,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    pub image: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub kind: AttackKind,
    #[arg(long, default_value_t = 3)]
    pub kernel: u32,
    #[arg(long, default_value_t = 0.01)]
    pub density: f64,
    /// Noise variance on the [0, 1] intensity scale.
    #[arg(long, default_value_t = 0.003)]
    pub variance: f64,
    #[arg(long, default_value_t = 75)]
    pub quality: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Bench image as `name=path`; replaces the configured list.
    #[arg(long = "image", value_name = "NAME=PATH")]
    pub images: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid-search alpha/beta and fixed_sf instead of benchmarking.
    #[arg(long)]
    pub calibrate: bool,
    #[command(flatten)]
    pub params: ParamOverrides,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = config::ToolkitConfig::load_or_default(cli.config.as_deref())?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Embed(a) => commands::cmd_embed(&a, cfg, &mut out),
        Command::Extract(a) => commands::cmd_extract(&a, cfg, &mut out),
        Command::Attack(a) => commands::cmd_attack(&a, &mut out),
        Command::Bench(a) => commands::cmd_bench(&a, cfg, &mut out),
    }
}
