use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use glyphctl::fontmetric::TopK;
use glyphctl::geometry::Quad;

fn quad(s: &str) -> Result<Quad, String> {
    Quad::parse(s)
}

#[derive(Debug, Parser)]
#[command(name = "glyphctl", version, about = "Glyph-conditioned scene text editing toolkit")]
pub struct Cli {
    /// Print results, and errors on stderr, as single-line JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize text lines into a binary glyph mask.
    RenderGlyph(RenderGlyphArgs),
    /// Jitter a quad's corners and report the homography between them.
    Perturb(PerturbArgs),
    /// Apply the OCR quality gate to one prediction.
    Gate(GateArgs),
    /// Build training examples from a JSON Lines manifest.
    PrepareDataset(PrepareArgs),
    /// Build the generator's conditioning inputs for an image.
    Bundle(BundleArgs),
    /// Replace text in an image: bundle, generate and blend back.
    Edit(EditArgs),
    /// Poisson-blend a source image into a destination under a mask.
    Blend(BlendArgs),
    /// Score generated outputs against an evaluation manifest.
    Eval(EvalArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

/// Quads are 8 comma-separated numbers: TL, TR, BR, BL corners as x,y pairs.
#[derive(Debug, Args)]
pub struct LineArgs {
    /// Text of a line; repeat once per line.
    #[arg(long = "text", required = true)]
    pub texts: Vec<String>,
    /// Quad of a line, e.g. 10,10,90,10,90,90,10,90; one per --text.
    #[arg(long = "quad", value_parser = quad, required = true, allow_hyphen_values = true)]
    pub quads: Vec<Quad>,
    /// TrueType font file; give one for all lines or one per line.
    #[arg(long = "font", required = true)]
    pub fonts: Vec<PathBuf>,
    /// Lay the lines out top to bottom.
    #[arg(long)]
    pub vertical: bool,
}

#[derive(Debug, Args)]
pub struct RenderGlyphArgs {
    #[command(flatten)]
    pub lines: LineArgs,
    /// Canvas side when --width/--height are not given.
    #[arg(long, default_value_t = 512)]
    pub canvas: u32,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, value_parser = quad, allow_hyphen_values = true)]
    pub quad: Quad,
    #[arg(long)]
    pub seed: u64,
    /// Largest per-coordinate offset in pixels.
    #[arg(long, default_value_t = 5.0)]
    pub epsilon: f64,
    /// Corners are clamped to [0, width] x [0, height].
    #[arg(long, default_value_t = 512.0)]
    pub width: f64,
    #[arg(long, default_value_t = 512.0)]
    pub height: f64,
}

#[derive(Debug, Args)]
pub struct CriteriaArgs {
    /// Lowest OCR confidence accepted.
    #[arg(long, default_value_t = 0.8)]
    pub min_conf: f64,
    /// Largest edit distance accepted, as a fraction of the target length.
    #[arg(long, default_value_t = 0.2)]
    pub max_edit_ratio: f64,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// OCR confidence of the prediction.
    #[arg(long)]
    pub conf: f64,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub pred: String,
    #[command(flatten)]
    pub criteria: CriteriaArgs,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving examples.jsonl, rejections.jsonl and artifacts.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5.0)]
    pub epsilon: f64,
    #[command(flatten)]
    pub criteria: CriteriaArgs,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct BundleInput {
    /// Input PNG; without it a white canvas of --width x --height is used.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, requires = "height", conflicts_with = "image")]
    pub width: Option<u32>,
    #[arg(long, requires = "width", conflicts_with = "image")]
    pub height: Option<u32>,
    #[command(flatten)]
    pub lines: LineArgs,
    #[arg(long, default_value = "")]
    pub caption: String,
    /// Generator canvas side.
    #[arg(long, default_value_t = 512)]
    pub canvas: u32,
    /// Margin around the text region when zooming, as a fraction of its side.
    #[arg(long)]
    pub zoom_margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[command(flatten)]
    pub input: BundleInput,
    /// Noise seed recorded in the bundle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving glyph.png, position.png, masked.png and bundle.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[command(flatten)]
    pub input: BundleInput,
    #[arg(long)]
    pub seed: u64,
    /// Shrink each horizontal quad to fit its new text.
    #[arg(long)]
    pub tighten: bool,
    /// Erase the old text first, when the generator can.
    #[arg(long)]
    pub inpaint: bool,
    /// Use the in-process stub generator even if one is configured.
    #[arg(long, conflicts_with = "generator_url")]
    pub stub: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the bundle to this directory.
    #[arg(long)]
    pub bundle_out: Option<PathBuf>,
    /// Also write the blend region mask to this PNG.
    #[arg(long)]
    pub region_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Largest residual accepted by the Poisson solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Solver iterations per channel; default ten times the masked pixels.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub dst: PathBuf,
    /// Binary mask PNG; white pixels take the source's gradients.
    #[arg(long)]
    pub mask: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding <id>.png for every manifest record.
    #[arg(long)]
    pub outputs: PathBuf,
    /// Comma-separated k values, e.g. 5,20,50,full.
    #[arg(long = "k", value_delimiter = ',', default_value = "5,20,50,full")]
    pub ks: Vec<TopK>,
    /// Method name in the report's first column.
    #[arg(long, default_value = "glyphctl")]
    pub method: String,
    /// Classify only the segmented text pixels.
    #[arg(long)]
    pub isolate: bool,
    /// Fonts for the built-in reference classifier.
    #[arg(long)]
    pub reference_fonts: Option<PathBuf>,
    /// Text each reference font renders.
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write the per-language CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write one row per (language, k) here.
    #[arg(long)]
    pub long_out: Option<PathBuf>,
    #[command(flatten)]
    pub backends: BackendArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory of .ttf files to preload; repeatable.
    #[arg(long = "fonts")]
    pub font_dirs: Vec<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub queue_depth: usize,
    #[arg(long, default_value_t = 64)]
    pub max_body_mb: usize,
    #[command(flatten)]
    pub backends: BackendArgs,
}

/// Overrides for the GLYPHCTL_* environment variables.
#[derive(Debug, Args, Default)]
pub struct BackendArgs {
    #[arg(long)]
    pub generator_url: Option<String>,
    #[arg(long)]
    pub ocr_url: Option<String>,
    #[arg(long)]
    pub classifier_url: Option<String>,
    #[arg(long)]
    pub classifier_labels: Option<usize>,
    #[arg(long)]
    pub segmenter_url: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub retries: Option<u32>,
}
