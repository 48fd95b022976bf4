//! `infestscope`: tiling, feature enhancement, detection evaluation and
//! infestation situation analysis from the command line.
//!
//! Every subcommand writes its artifacts plus `<subcommand>.manifest.json`
//! into `--out`. Failures print one JSON line `{"error": ..., "subcommand": ...}`
//! on stderr and exit with status 1.

mod artifacts;
mod commands;
mod draw;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

// large rasters are allocated and freed repeatedly; mimalloc keeps pages mapped
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "infestscope", version, about = "UAV forest-pest image analytics pipeline")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, env = "INFESTSCOPE_THREADS", default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut an image into square tiles.
    Tile(TileArgs),
    /// Build the feature-enhanced image (VDVI, texture, NGBDI).
    Fem(FemArgs),
    /// Forward passes of the fusion and channel-attention blocks.
    Blocks {
        #[command(subcommand)]
        command: BlocksCommand,
    },
    /// Score detections against annotations (precision, recall, AP, mAP).
    Evaluate(EvaluateArgs),
    /// Kernel density of infected trees on a grid.
    Density(DensityArgs),
    /// Risk score of every healthy tree from a density field.
    Risk(RiskArgs),
    /// Cluster healthy trees into protection areas with fitted ellipses.
    Protect(ProtectArgs),
    /// Infection statistics per crown-size class.
    Sizeclass(SizeclassArgs),
    /// Generate a synthetic scene with known ground truth.
    Synth(SynthArgs),
    /// Bundle the artifacts of one directory into a single report.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Pnm,
    Png,
}

impl ImageFormat {
    pub fn extension(self, channels: usize) -> &'static str {
        match (self, channels) {
            (ImageFormat::Png, _) => "png",
            (ImageFormat::Pnm, 1) => "pgm",
            (ImageFormat::Pnm, _) => "ppm",
        }
    }
}

#[derive(Args)]
pub struct TileArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub tile_size: usize,
    /// Pixels shared by neighbouring tiles.
    #[arg(long, default_value_t = 0)]
    pub overlap: usize,
    #[arg(long, value_enum, default_value_t = ImageFormat::Pnm)]
    pub format: ImageFormat,
    /// Reassemble the written tiles and check they reproduce the input exactly.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args)]
pub struct FemArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ImageFormat::Pnm)]
    pub format: ImageFormat,
}

#[derive(Subcommand)]
enum BlocksCommand {
    /// Run fusion then channel attention on an RGB / feature-image pair.
    Demo(BlocksArgs),
}

#[derive(Args)]
pub struct BlocksArgs {
    #[arg(long)]
    pub rgb: PathBuf,
    /// Feature image (typically `tofi.ppm` from `fem`).
    #[arg(long)]
    pub tofi: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output channels of the fusion projections.
    #[arg(long, default_value_t = 3)]
    pub channels_out: usize,
    /// JSON array, `channels_out x 3` row-major.
    #[arg(long)]
    pub proj_rgb: Option<PathBuf>,
    /// JSON array, `channels_out x 3` row-major.
    #[arg(long)]
    pub proj_fem: Option<PathBuf>,
    /// JSON array of the two branch logits `[rgb, fem]`.
    #[arg(long)]
    pub logits: Option<PathBuf>,
    /// JSON array of channel-attention kernel weights.
    #[arg(long)]
    pub eca_weights: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub gamma: u32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub b: i32,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Detection CSV (`image_id,class,score,x_min,y_min,x_max,y_max`).
    #[arg(long)]
    pub dets: PathBuf,
    /// Annotation CSV.
    #[arg(long, conflicts_with = "voc", required_unless_present = "voc")]
    pub gts: Option<PathBuf>,
    /// Directory of Pascal-VOC XML annotations.
    #[arg(long)]
    pub voc: Option<PathBuf>,
    /// Detections below this score are ignored for precision and recall.
    #[arg(long, default_value_t = 0.0)]
    pub score_thr: f64,
    /// Include AP for every class at every IoU threshold.
    #[arg(long)]
    pub per_class: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DensityArgs {
    /// Detection or annotation CSV; infected trees feed the density.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub grid_w: usize,
    #[arg(long, default_value_t = 256)]
    pub grid_h: usize,
    /// Scale the bandwidth by the per-axis sample standard deviation.
    #[arg(long, conflicts_with = "bandwidth")]
    pub scott_bandwidth: bool,
    /// Fixed bandwidth in normalized units.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Plot extent `x_min,y_min,x_max,y_max`; defaults to the bounding box of all trees.
    #[arg(long, allow_hyphen_values = true)]
    pub extent: Option<String>,
    /// Local maxima to report.
    #[arg(long, default_value_t = 3)]
    pub peaks: usize,
    #[arg(long, default_value_t = 0.0)]
    pub score_thr: f64,
}

#[derive(Args)]
pub struct RiskArgs {
    /// Detection or annotation CSV; healthy trees are scored.
    #[arg(long)]
    pub input: PathBuf,
    /// `density.json` written by `density`.
    #[arg(long)]
    pub density: PathBuf,
    /// Neighbourhood radius in normalized units; set it from the pest's dispersal distance.
    #[arg(long, default_value_t = infestscope_core::situation::risk::DEFAULT_RADIUS)]
    pub radius: f64,
    /// Highest-risk trees listed in the summary.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = 0.0)]
    pub score_thr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ProtectArgs {
    /// Detection or annotation CSV; healthy trees are clustered.
    #[arg(long)]
    pub input: PathBuf,
    /// Neighbourhood radius in pixels; defaults to the median 4th-nearest-neighbour distance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub min_pts: usize,
    /// RGB image to draw the overlay on.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Longest side of the overlay when no background is given.
    #[arg(long, default_value_t = 1024)]
    pub max_side: usize,
    #[arg(long, default_value_t = 0.0)]
    pub score_thr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SizeclassArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Equal-count classes instead of equal-width area intervals.
    #[arg(long)]
    pub tertiles: bool,
    #[arg(long, default_value_t = 0.0)]
    pub score_thr: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Scene specification JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render the scene as `scene.ppm`.
    #[arg(long)]
    pub render: bool,
    /// Rendered pixels per plot pixel.
    #[arg(long, default_value_t = 1.0)]
    pub ppm: f64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Directory holding the subcommand artifacts.
    #[arg(long)]
    pub dir: PathBuf,
    /// Defaults to `report.json` inside `--dir`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tile(_) => "tile",
            Command::Fem(_) => "fem",
            Command::Blocks { .. } => "blocks",
            Command::Evaluate(_) => "evaluate",
            Command::Density(_) => "density",
            Command::Risk(_) => "risk",
            Command::Protect(_) => "protect",
            Command::Sizeclass(_) => "sizeclass",
            Command::Synth(_) => "synth",
            Command::Report(_) => "report",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()?;
    }
    match cli.command {
        Command::Tile(a) => commands::tile(a),
        Command::Fem(a) => commands::fem(a),
        Command::Blocks {
            command: BlocksCommand::Demo(a),
        } => commands::blocks_demo(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Density(a) => commands::density(a),
        Command::Risk(a) => commands::risk(a),
        Command::Protect(a) => commands::protect(a),
        Command::Sizeclass(a) => commands::sizeclass(a),
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            let line = serde_json::json!({ "error": msg, "subcommand": name });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
