mod args;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::Parser;

use rava_core::annotation::{
    load_annotations, load_blueprint, save_blueprint, save_scenes, to_canonical_json,
    AnnotationFile, ScenesFile,
};
use rava_core::frames::{encode_png, frame_name, read_png_dir, FramesError};
use rava_core::metrics::{evaluate_sequence, MetricError};
use rava_core::planner::{
    build_prompt, heuristic_plan, plan_with_model, ChatClient, Completer, CompletionError,
    Instruction, Keyframe, PlanError, PlanText, PlannerConfig, PlannerMode, Prompt, ReplayStore,
};
use rava_core::render::{center_cut, render_video, RenderConfig, RenderError};
use rava_core::scene::detect_scenes;
use rava_core::{AspectRatio, Blueprint, FrameSequence, SceneDetectConfig};

use args::{Cli, Command, Mode, PlanOpts, RenderOpts};
use manifest::RunManifest;

const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
enum Failure {
    Io(String),
    Config(String),
    Plan(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => 2,
            Self::Config(_) => 3,
            Self::Plan(_) => 4,
            Self::Mismatch(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Io(m) | Self::Config(m) | Self::Plan(m) | Self::Mismatch(m) => m,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io(path, e))
}

/// `scenes.json` -> `scenes.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned()
}

fn frames_err(e: FramesError) -> Failure {
    Failure::Io(e.to_string())
}

fn load_frames(dir: &Path, fps: f64) -> Result<FrameSequence> {
    read_png_dir(dir, fps).map_err(frames_err)
}

fn load_annotation_file(path: &Path) -> Result<AnnotationFile> {
    load_annotations(&read(path)?).map_err(|e| io(path, e))
}

fn parse_aspect(s: &str) -> Result<AspectRatio> {
    s.parse()
        .map_err(|e| Failure::Config(format!("--aspect {s:?}: {e}")))
}

/// Writes frames as `frame_%06d.png` into `dir` and records them.
fn write_frames(video: &FrameSequence, dir: &Path, m: &mut RunManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for (i, f) in video.frames().iter().enumerate() {
        let name = frame_name(i);
        let bytes = encode_png(f);
        write(&dir.join(&name), &bytes)?;
        m.output(&name, &bytes);
    }
    Ok(())
}

fn cmd_detect(a: args::DetectArgs) -> Result<()> {
    let cfg = SceneDetectConfig::new(a.alpha1, a.alpha2).map_err(|e| Failure::Config(e.to_string()))?;
    if !(a.fps > 0.0 && a.fps.is_finite()) {
        return Err(Failure::Config(format!("--fps {} must be positive", a.fps)));
    }
    let mut m = RunManifest::new("detect-scenes");
    m.input("frames", &a.frames);
    m.config("scene_detect", cfg);
    let video = m.time("read", || load_frames(&a.frames, a.fps))?;
    let scenes = m.time("detect", || detect_scenes(&video, &cfg));
    let file = ScenesFile {
        frame_count: video.len(),
        width: video.width(),
        height: video.height(),
        fps: video.fps(),
        scenes,
    };
    let bytes = save_scenes(&file);
    write(&a.out, &bytes)?;
    m.output(&file_name(&a.out), &bytes);
    write(&manifest_path(&a.out), &m.to_bytes())?;
    println!("{} scenes", file.scenes.len());
    Ok(())
}

/// Saves live answers into a replay directory.
struct Recording<'a> {
    inner: &'a dyn Completer,
    store: ReplayStore,
}

impl Completer for Recording<'_> {
    fn complete(&self, prompt: &Prompt) -> std::result::Result<PlanText, CompletionError> {
        let text = self.inner.complete(prompt)?;
        if let Err(e) = self.store.save(prompt, &text) {
            eprintln!("warning: could not record answer: {e}");
        }
        Ok(text)
    }
}

fn planner_config(o: &PlanOpts) -> PlannerConfig {
    let mut cfg = PlannerConfig::from_env();
    cfg.mode = match o.mode {
        Mode::Heuristic => PlannerMode::Heuristic,
        Mode::Llm => PlannerMode::Llm,
    };
    if o.endpoint.is_some() {
        cfg.endpoint = o.endpoint.clone();
    }
    cfg.model_name = o.model.clone();
    cfg.timeout = Duration::from_secs(o.timeout_secs);
    cfg.max_retries = o.retries;
    cfg.multimodal = o.multimodal;
    cfg.replay_dir = o.replay.clone();
    cfg
}

fn keyframes(dir: &Path, file: &AnnotationFile) -> Result<Vec<Keyframe>> {
    let video = load_frames(dir, file.fps)?;
    file.scenes
        .iter()
        .map(|s| {
            let frame = video.frames().get(s.keyframe).ok_or_else(|| {
                Failure::Mismatch(format!(
                    "keyframe {} of scene {} is past the {} frames in {}",
                    s.keyframe,
                    s.scene_index,
                    video.len(),
                    dir.display()
                ))
            })?;
            Ok(Keyframe {
                scene_index: s.scene_index,
                png: encode_png(frame),
            })
        })
        .collect()
}

fn plan_err(e: PlanError) -> Failure {
    match e {
        PlanError::InstructionTooLong(_) => Failure::Config(e.to_string()),
        PlanError::Completion(CompletionError::Config(_)) => Failure::Config(e.to_string()),
        other => Failure::Plan(other.to_string()),
    }
}

fn run_plan(o: &PlanOpts, file: &AnnotationFile, m: &mut RunManifest) -> Result<Blueprint> {
    let instr = Instruction::new(o.instruction.clone()).map_err(plan_err)?;
    let aspect = parse_aspect(&o.aspect)?;
    let cfg = planner_config(o);
    m.input("annotations", &o.annotations);
    m.config("instruction", instr.as_str());
    m.config("aspect", aspect);
    m.config(
        "planner",
        serde_json::json!({
            "mode": format!("{:?}", cfg.mode).to_lowercase(),
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "max_retries": cfg.max_retries,
            "multimodal": cfg.multimodal,
            "replay": cfg.replay_dir.is_some(),
        }),
    );
    if let Some(dir) = &cfg.replay_dir {
        m.input("replay", dir);
    }

    if let Some(path) = &o.emit_prompt {
        let descriptions: Vec<_> = file
            .scenes
            .iter()
            .map(rava_core::annotation::describe_scene)
            .collect();
        let prompt = build_prompt(&instr, &descriptions, aspect);
        write(path, prompt.text.as_bytes())?;
    }

    match cfg.mode {
        PlannerMode::Heuristic => m.time("plan", || heuristic_plan(&instr, file, aspect)).map_err(plan_err),
        PlannerMode::Llm => {
            let frames = match (&o.keyframes_from, cfg.multimodal) {
                (Some(dir), true) => keyframes(dir, file)?,
                _ => Vec::new(),
            };
            let live;
            let replay;
            let completer: &dyn Completer = if let Some(dir) = &cfg.replay_dir {
                replay = ReplayStore::new(dir);
                &replay
            } else {
                live = ChatClient::new(&cfg)
                    .map_err(|e| Failure::Config(e.to_string()))?;
                &live
            };
            let recording;
            let completer = match &o.record {
                Some(dir) => {
                    recording = Recording {
                        inner: completer,
                        store: ReplayStore::new(dir),
                    };
                    &recording as &dyn Completer
                }
                None => completer,
            };
            m.time("plan", || plan_with_model(completer, &instr, file, aspect, frames))
                .map_err(plan_err)
        }
    }
}

fn cmd_plan(a: args::PlanArgs) -> Result<()> {
    let mut m = RunManifest::new("plan");
    let file = load_annotation_file(&a.plan.annotations)?;
    let bp = run_plan(&a.plan, &file, &mut m)?;
    let bytes = save_blueprint(&bp);
    write(&a.out, &bytes)?;
    m.output(&file_name(&a.out), &bytes);
    write(&manifest_path(&a.out), &m.to_bytes())?;
    println!("{} scene plans", bp.plans.len());
    Ok(())
}

fn render_config(o: &RenderOpts, file: &AnnotationFile, bp: &Blueprint) -> Result<RenderConfig> {
    let mut cfg = match (o.width, o.height, bp.plans.first()) {
        (Some(w), Some(h), _) => RenderConfig::new(w, h),
        (_, _, Some(p)) => RenderConfig::for_aspect(file.width, file.height, p.aspect),
        _ => return Err(Failure::Mismatch("blueprint has no plans".into())),
    };
    cfg.zoom_depth = o.zoom_depth;
    cfg.fade_frames = o.fade_frames;
    cfg.margin = o.margin;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn render_err(e: RenderError) -> Failure {
    match e {
        RenderError::Config(_) | RenderError::TooWide { .. } => Failure::Config(e.to_string()),
        RenderError::Model(_) => Failure::Io(e.to_string()),
        other => Failure::Mismatch(other.to_string()),
    }
}

fn run_render(
    frames: &Path,
    file: &AnnotationFile,
    bp: &Blueprint,
    o: &RenderOpts,
    out: &Path,
    m: &mut RunManifest,
) -> Result<usize> {
    let cfg = render_config(o, file, bp)?;
    m.input("frames", frames);
    m.config("render", &cfg);
    let video = m.time("read", || load_frames(frames, file.fps))?;
    let rendered = m.time("render", || render_video(&video, bp, file, &cfg)).map_err(render_err)?;
    let t0 = Instant::now();
    write_frames(&rendered, out, m)?;
    m.timing("write", t0);
    Ok(rendered.len())
}

fn cmd_render(a: args::RenderArgs) -> Result<()> {
    let mut m = RunManifest::new("render");
    let file = load_annotation_file(&a.annotations)?;
    let bp = load_blueprint(&read(&a.blueprint)?).map_err(|e| io(&a.blueprint, e))?;
    m.input("annotations", &a.annotations);
    m.input("blueprint", &a.blueprint);
    let n = run_render(&a.frames, &file, &bp, &a.render, &a.out, &mut m)?;
    write(&a.out.join("run_manifest.json"), &m.to_bytes())?;
    println!("{n} frames");
    Ok(())
}

fn cmd_reframe(a: args::ReframeArgs) -> Result<()> {
    let mut m = RunManifest::new("reframe");
    let file = load_annotation_file(&a.plan.annotations)?;
    let bp = run_plan(&a.plan, &file, &mut m)?;
    let bytes = save_blueprint(&bp);
    write(&a.out.join("blueprint.json"), &bytes)?;
    m.output("blueprint.json", &bytes);
    let n = run_render(&a.frames, &file, &bp, &a.render, &a.out.join("frames"), &mut m)?;
    write(&a.out.join("run_manifest.json"), &m.to_bytes())?;
    println!("{} scene plans, {n} frames", bp.plans.len());
    Ok(())
}

fn cmd_center_cut(a: args::CenterCutArgs) -> Result<()> {
    let aspect = parse_aspect(&a.aspect)?;
    let mut m = RunManifest::new("center-cut");
    m.input("frames", &a.frames);
    m.config("aspect", aspect);
    let video = load_frames(&a.frames, rava_core::model::DEFAULT_FPS)?;
    let out = center_cut(&video, aspect).map_err(render_err)?;
    write_frames(&out, &a.out, &mut m)?;
    write(&a.out.join("run_manifest.json"), &m.to_bytes())?;
    println!("{} frames at {}x{}", out.len(), out.width(), out.height());
    Ok(())
}

fn cmd_evaluate(a: args::EvaluateArgs) -> Result<()> {
    let report = evaluate_sequence(&a.pred, &a.gt).map_err(|e| match e {
        MetricError::FileSets { .. } | MetricError::Frame { .. } | MetricError::DimMismatch(..) => {
            Failure::Mismatch(e.to_string())
        }
        other => Failure::Io(other.to_string()),
    })?;
    let bytes = to_canonical_json(&report);
    if let Some(path) = &a.report {
        write(path, &bytes)?;
        let mut m = RunManifest::new("evaluate");
        m.input("pred", &a.pred);
        m.input("gt", &a.gt);
        m.output(&file_name(path), &bytes);
        write(&manifest_path(path), &m.to_bytes())?;
    }
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    match cli.command {
        Command::DetectScenes(a) => cmd_detect(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Render(a) => cmd_render(a),
        Command::Reframe(a) => cmd_reframe(a),
        Command::CenterCut(a) => cmd_center_cut(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
