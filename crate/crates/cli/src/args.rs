use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "svtf", version, about = "Build, inspect and render sparse volume textures", arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SVTF_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Print progress and timings to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    /// Omit timings and other run-dependent output.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a SEG-Y file into a raw volume with sidecar.
    ImportSegy(ImportSegyArgs),
    /// Re-encode a headerless volume as little-endian raw with sidecar.
    ImportRaw(ImportRawArgs),
    /// Map a float volume onto 8-bit values.
    Normalize(NormalizeArgs),
    /// Tile a raw volume into an SVT container.
    Build(BuildArgs),
    /// Print the capacity report.
    Plan(PlanArgs),
    /// Write the occupancy-compressed upload stream of a container.
    DumpUpload(DumpUploadArgs),
    /// Expand an upload stream into the atlas of a container.
    ApplyUpload(ApplyUploadArgs),
    /// Sample a container at one position.
    Probe(ProbeArgs),
    /// Raymarch a container into a PPM image.
    Render(RenderArgs),
    /// Render a chunked volume with independent and unified lighting.
    ChunkCompare(ChunkCompareArgs),
    /// Describe a container, upload stream, raw volume or SEG-Y file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct ImportSegyArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// SEG-Y axes mapped to volume x, y, z, e.g. `xis` or `crossline,inline,sample`.
    #[arg(long, default_value = "xis")]
    pub axes: String,
}

#[derive(Debug, Args)]
pub struct ImportRawArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// `X,Y,Z`; read from the input's sidecar when omitted.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_enum, default_value = "little")]
    pub endian: EndianArg,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// `LO,HI`; defaults to the volume's value range.
    #[arg(long)]
    pub range: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct TilingArgs {
    #[arg(long, default_value_t = 16)]
    pub tile: u32,
    #[arg(long, default_value_t = 1)]
    pub pad: u32,
    /// Largest atlas edge in voxels.
    #[arg(long, default_value_t = 2048)]
    pub extent: u32,
    /// Float values with magnitude at or below this are empty.
    #[arg(long, default_value_t = 0.0)]
    pub empty_threshold: f32,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tiling: TilingArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub tiling: TilingArgs,
    /// Non-empty voxel count.
    #[arg(long, default_value_t = 0.0)]
    pub nonempty: f64,
    #[arg(long, default_value_t = 1)]
    pub bytes_per_voxel: u32,
    /// Mean tile occupancy used to estimate tile counts.
    #[arg(long, default_value_t = 1.0)]
    pub occupancy: f64,
    /// Take counts from a built container instead.
    #[arg(long, conflicts_with_all = ["nonempty", "bytes_per_voxel", "occupancy"])]
    pub from: Option<PathBuf>,
    /// Also report 64-bit and wrapped int32 end offsets for this payload.
    #[arg(long)]
    pub probe_payload: Option<u64>,
    /// Only print key: value lines.
    #[arg(long)]
    pub kv: bool,
    /// Exit 3 when anything does not fit.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct DumpUploadArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Write the stream even when it passes 4 GiB.
    #[arg(long)]
    pub allow_overflow: bool,
}

#[derive(Debug, Args)]
pub struct ApplyUploadArgs {
    /// Upload stream.
    pub input: PathBuf,
    /// Container supplying configuration and page tables.
    #[arg(long)]
    pub svt: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FilterArg {
    Nearest,
    Trilinear,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    pub input: PathBuf,
    /// `X,Y,Z` in mip-0 voxel units, voxel centres at `i + 0.5`.
    #[arg(long, allow_hyphen_values = true)]
    pub pos: String,
    #[arg(long, default_value_t = 0)]
    pub mip: u32,
    #[arg(long, value_enum, default_value = "trilinear")]
    pub filter: FilterArg,
}

#[derive(Debug, Args, Clone)]
pub struct ViewArgs {
    #[arg(long, default_value_t = 512)]
    pub width: u32,
    #[arg(long, default_value_t = 512)]
    pub height: u32,
    /// Camera position `X,Y,Z`; defaults to in front of the volume on -z.
    #[arg(long, allow_hyphen_values = true)]
    pub eye: Option<String>,
    /// Look-at point; defaults to the volume centre.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value = "0,1,0")]
    pub up: String,
    /// Vertical field of view in degrees.
    #[arg(long, default_value_t = 40.0)]
    pub fov: f64,
    /// Orthographic view height in voxels (replaces --fov).
    #[arg(long)]
    pub ortho: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    pub steps: u32,
    #[arg(long, default_value_t = 4)]
    pub downsample: u32,
    #[arg(long, default_value_t = 64)]
    pub shadow_steps: u32,
    #[arg(long, default_value_t = 0)]
    pub mip: u32,
    /// 256 lines of `R G B A` integers.
    #[arg(long)]
    pub lut: Option<PathBuf>,
    /// Visible normalized range `LO,HI`.
    #[arg(long, default_value = "0,1")]
    pub window: String,
    #[arg(long, default_value_t = 1.0)]
    pub density_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub emission_scale: f64,
    /// `NX,NY,NZ,D`: samples with `n . p > D` are hidden.
    #[arg(long, allow_hyphen_values = true)]
    pub cut: Option<String>,
    /// `dir:X,Y,Z:R,G,B` or `point:X,Y,Z:RADIUS:R,G,B`; repeatable.
    #[arg(long = "light", allow_hyphen_values = true)]
    pub lights: Vec<String>,
    #[arg(long, default_value = "0,0,0")]
    pub background: String,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub view: ViewArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct ChunkCompareArgs {
    /// Raw volume with sidecar.
    pub input: PathBuf,
    /// Directory for `independent.ppm` and `unified.ppm`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "x")]
    pub axis: AxisArg,
    #[arg(long, default_value_t = 2)]
    pub count: u32,
    /// Half-width of the border band in pixels.
    #[arg(long, default_value_t = 2)]
    pub band: u32,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[command(flatten)]
    pub view: ViewArgs,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    U8,
    F32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EndianArg {
    Little,
    Big,
}
