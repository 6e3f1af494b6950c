use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gauss-avatar", version, about = "UV-anchored Gaussian avatar toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project pose-space Gaussians onto the body into a parameter map.
    LiftUnproject(LiftUnprojectArgs),
    /// Cross-attend a positionally encoded position map to a compact Gaussian context.
    LiftAttend(LiftAttendArgs),
    /// Sample structured Gaussians from a (composed) parameter map.
    Sample(SampleArgs),
    /// Swap a region between two parameter maps or blend them.
    Edit(EditArgs),
    /// Render every pose of a sequence, one image per frame.
    Animate(AnimateArgs),
    /// Render one pose from one camera.
    Render(RenderArgs),
    /// Compare rendered images against references.
    Metrics(MetricsArgs),
    /// Time the render pipeline per stage.
    Bench(BenchArgs),
    /// Write a procedural body, maps, poses, camera and Gaussians.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON file of default values keyed by flag name (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the reproducibility manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BodyArgs {
    /// OBJ mesh with one UV per face corner.
    #[arg(long)]
    pub body: Option<PathBuf>,
    /// Skin JSON: joints, weights, face labels.
    #[arg(long)]
    pub skin: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long)]
    pub n_uv: Option<usize>,
    #[arg(long)]
    pub n_surface: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RasterArgs {
    /// Background colour `r,g,b` in [0,1].
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long)]
    pub tile_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    MaxAlpha,
    Average,
}

#[derive(Debug, Args)]
pub struct LiftUnprojectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub body: BodyArgs,
    /// Pose the Gaussians were reconstructed in (rest pose when absent).
    #[arg(long)]
    pub pose: Option<PathBuf>,
    /// Pose-space Gaussian record stream.
    #[arg(long)]
    pub gaussians: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub map_size: Option<usize>,
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LiftAttendArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub body: BodyArgs,
    #[arg(long)]
    pub pose: Option<PathBuf>,
    #[arg(long)]
    pub gaussians: Option<PathBuf>,
    /// Weights manifest; when absent, weights are drawn from `--weights-seed`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub weights_seed: Option<u64>,
    /// Also write the weights used.
    #[arg(long)]
    pub save_weights: Option<PathBuf>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub compact: Option<usize>,
    #[arg(long)]
    pub n_freq: Option<usize>,
    #[arg(long)]
    pub latent_size: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub body: BodyArgs,
    #[arg(long)]
    pub canonical: Option<PathBuf>,
    #[arg(long)]
    pub offset: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[command(flatten)]
    pub common: Common,
    /// Base map.
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Donor map.
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Blend weight toward `b`; selects interpolation.
    #[arg(long)]
    pub blend: Option<f64>,
    /// Swap texels whose face carries one of these labels (needs the body).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<u32>>,
    /// Swap texels whose centers fall in `u0,v0,u1,v1`.
    #[arg(long)]
    pub rect: Option<String>,
    #[command(flatten)]
    pub body: BodyArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub body: BodyArgs,
    #[arg(long)]
    pub canonical: Option<PathBuf>,
    #[arg(long)]
    pub offset: Option<PathBuf>,
    #[arg(long)]
    pub pose: Option<PathBuf>,
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub raster: RasterArgs,
    /// Also dump the float raster (r, g, b, alpha) as UVM.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub body: BodyArgs,
    #[arg(long)]
    pub canonical: Option<PathBuf>,
    #[arg(long)]
    pub offset: Option<PathBuf>,
    /// JSON array of poses.
    #[arg(long)]
    pub poses: Option<PathBuf>,
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub raster: RasterArgs,
    /// Resample the canonical map every frame.
    #[arg(long)]
    pub no_cache: bool,
    /// Also dump float rasters next to the frames.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rendered images (PNG or UVM); repeat for sequences.
    #[arg(long, required = true)]
    pub rendered: Vec<PathBuf>,
    /// References, one per rendered image.
    #[arg(long)]
    pub reference: Vec<PathBuf>,
    /// Alpha masks, one per rendered image (alpha channel, or red for RGB).
    #[arg(long)]
    pub mask: Vec<PathBuf>,
    /// Offset map whose norm to report.
    #[arg(long)]
    pub offset: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Total Gaussians, split evenly between grid and surface anchors.
    #[arg(long)]
    pub gaussians: Option<usize>,
    /// Square image side in pixels.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub map_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tile_size: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub map_size: Option<usize>,
    /// Quads around the tube.
    #[arg(long)]
    pub around: Option<usize>,
    /// Quads along the tube.
    #[arg(long)]
    pub rings: Option<usize>,
    #[arg(long)]
    pub joints: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Square image side of the written camera.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Pose-space Gaussians to scatter over the surface.
    #[arg(long)]
    pub gaussians: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
