use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rava", version, about = "Instruction-driven video reframing")]
pub struct Cli {
    /// Worker threads for rendering and metrics (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a PNG sequence into scenes.
    DetectScenes(DetectArgs),
    /// Turn annotations and an instruction into a blueprint.
    Plan(PlanArgs),
    /// Execute a blueprint against the source frames.
    Render(RenderArgs),
    /// Plan and render in one go.
    Reframe(ReframeArgs),
    /// Fixed centered crop baseline.
    CenterCut(CenterCutArgs),
    /// Score predicted saliency maps against ground-truth masks.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Directory of PNG frames, read in file-name order.
    #[arg(long)]
    pub frames: PathBuf,
    /// Content-score threshold.
    #[arg(long, default_value_t = 5.0)]
    pub alpha1: f64,
    /// Minimum scene length in frames.
    #[arg(long, default_value_t = 5)]
    pub alpha2: usize,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Heuristic,
    Llm,
}

#[derive(Debug, Args)]
pub struct PlanOpts {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value = "")]
    pub instruction: String,
    #[arg(long, default_value = "9:16")]
    pub aspect: String,
    #[arg(long, value_enum, default_value_t = Mode::Heuristic)]
    pub mode: Mode,
    /// Answer model requests from `<sha256>.txt` files in this directory.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Save live model answers into this directory for later replay.
    #[arg(long, conflicts_with = "replay")]
    pub record: Option<PathBuf>,
    /// Write the rendered prompt to this file.
    #[arg(long)]
    pub emit_prompt: Option<PathBuf>,
    /// Chat-completion base URL (default: $RAVA_LLM_ENDPOINT).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Attach scene keyframes to the request (needs --keyframes-from).
    #[arg(long, requires = "keyframes_from")]
    pub multimodal: bool,
    /// Frame directory to take keyframes from.
    #[arg(long)]
    pub keyframes_from: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub plan: PlanOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderOpts {
    /// Output width (default: largest window of the plan aspect).
    #[arg(long, requires = "height")]
    pub width: Option<u32>,
    #[arg(long, requires = "width")]
    pub height: Option<u32>,
    #[arg(long, default_value_t = 0.8)]
    pub zoom_depth: f64,
    /// Fade ramp length in frames (default: min(15, scene_len / 4), at least 1).
    #[arg(long)]
    pub fade_frames: Option<usize>,
    #[arg(long, default_value_t = 0.10)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub blueprint: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub render: RenderOpts,
}

#[derive(Debug, Args)]
pub struct ReframeArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[command(flatten)]
    pub plan: PlanOpts,
    #[command(flatten)]
    pub render: RenderOpts,
    /// Output directory; receives blueprint.json and frames/.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CenterCutArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, default_value = "9:16")]
    pub aspect: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted saliency maps (grayscale PNG).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth masks with the same file names.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}
