use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;

use image::{GrayImage, Luma};
use serde_json::Value;

use rava_core::annotation::{load_blueprint, load_scenes, save_annotations, AnnotationFile};
use rava_core::frames::write_png_dir;
use rava_core::synth::two_scene_fixture;

fn rava(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rava"))
        .args(args)
        .env_remove("RAVA_LLM_ENDPOINT")
        .env_remove("RAVA_LLM_API_KEY")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    frames: PathBuf,
    ann: PathBuf,
    file: AnnotationFile,
}

fn fixture(len: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let (video, file) = two_scene_fixture(len);
    let frames = root.join("frames");
    write_png_dir(&video, &frames).unwrap();
    let ann = root.join("annotations.json");
    fs::write(&ann, save_annotations(&file)).unwrap();
    Fixture {
        _dir: dir,
        root,
        frames,
        ann,
        file,
    }
}

#[test]
fn help_and_version_exit_zero() {
    for cmd in ["detect-scenes", "plan", "render", "reframe", "center-cut", "evaluate"] {
        let out = rava(&[cmd, "--help"]);
        assert_eq!(code(&out), 0, "{cmd} --help");
        assert!(stdout(&out).contains("Usage"), "{cmd}");
    }
    assert_eq!(code(&rava(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&rava(&[])), 64);
    assert_eq!(code(&rava(&["plan", "--bogus"])), 64);
    assert_eq!(code(&rava(&["detect-scenes", "--frames", "x"])), 64);
    assert_eq!(
        code(&rava(&["plan", "--annotations", "a", "--out", "b", "--multimodal"])),
        64
    );
}

#[test]
fn missing_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rava(&[
        "detect-scenes",
        "--frames",
        s(&tmp.path().join("nope")),
        "--out",
        s(&tmp.path().join("scenes.json")),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_annotations_exit_2_with_path() {
    let f = fixture(4);
    let mut v: Value = serde_json::from_slice(&fs::read(&f.ann).unwrap()).unwrap();
    v["scenes"][0]["objects"][0]["bbox"] = Value::from("wide");
    fs::write(&f.ann, v.to_string()).unwrap();
    let out = rava(&["plan", "--annotations", s(&f.ann), "--out", s(&f.root.join("bp.json"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("scenes[0].objects[0].bbox"), "{}", stderr(&out));
}

#[test]
fn bad_config_exits_3() {
    let f = fixture(4);
    let out_path = f.root.join("scenes.json");
    for alpha in ["--alpha1=-1", "--alpha1=300"] {
        let out = rava(&["detect-scenes", "--frames", s(&f.frames), alpha, "--out", s(&out_path)]);
        assert_eq!(code(&out), 3, "{alpha}: {}", stderr(&out));
    }
    let out = rava(&["detect-scenes", "--frames", s(&f.frames), "--alpha2", "0", "--out", s(&out_path)]);
    assert_eq!(code(&out), 3);
    let out = rava(&["center-cut", "--frames", s(&f.frames), "--aspect", "tall", "--out", s(&f.root.join("c"))]);
    assert_eq!(code(&out), 3);
    let out = rava(&["--jobs", "0", "center-cut", "--frames", s(&f.frames), "--out", s(&f.root.join("c"))]);
    assert_eq!(code(&out), 3);
    // Model route without endpoint or replay.
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--out", s(&f.root.join("bp.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn detect_scenes_recovers_fixture_partition() {
    let f = fixture(20);
    let path = f.root.join("scenes.json");
    let out = rava(&["detect-scenes", "--frames", s(&f.frames), "--out", s(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "2 scenes");
    let scenes = load_scenes(&fs::read(&path).unwrap()).unwrap();
    assert_eq!(scenes.scenes, f.file.scene_list());
    assert!(f.root.join("scenes.manifest.json").exists());
}

fn write_replay(f: &Fixture, text: &str) -> PathBuf {
    // Discover the prompt's key by asking for it and failing the lookup.
    let dir = f.root.join("replay");
    fs::create_dir_all(&dir).unwrap();
    let prompt_file = f.root.join("prompt.txt");
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--replay", s(&dir),
        "--emit-prompt", s(&prompt_file), "--out", s(&f.root.join("unused.json")),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let prompt = fs::read_to_string(&prompt_file).unwrap();
    let hash = rava_core::planner::prompt_hash(&rava_core::planner::Prompt {
        text: prompt,
        images: Vec::new(),
    });
    fs::write(dir.join(format!("{hash}.txt")), text).unwrap();
    dir
}

#[test]
fn heuristic_and_replay_plans() {
    let f = fixture(6);
    let bp_path = f.root.join("bp.json");
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--instruction", "the yellow dog", "--out", s(&bp_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "2 scene plans");
    let bp = load_blueprint(&fs::read(&bp_path).unwrap()).unwrap();
    assert_eq!(bp.plans[1].object_ids, vec![1]);
    assert!(f.root.join("bp.manifest.json").exists());

    let replay = write_replay(
        &f,
        "Scene-0: layout=1; objects=[2]; effect_in=zoom_in; effect_trans=none; aspect=9:16\n\
         Scene-1: layout=2; objects=[2,1]; effect_in=none; effect_trans=fade_out; aspect=9:16\n",
    );
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--replay", s(&replay),
        "--out", s(&bp_path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let bp = load_blueprint(&fs::read(&bp_path).unwrap()).unwrap();
    assert_eq!(bp.plans[0].object_ids, vec![2]);
    assert_eq!(bp.plans[1].object_ids, vec![2, 1]);
    assert_eq!(bp.video_id, f.file.video_id);
}

#[test]
fn malformed_replay_exits_4_with_diagnostics() {
    let f = fixture(4);
    let replay = write_replay(
        &f,
        "Scene-0: layout=2; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16\n",
    );
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--replay", s(&replay),
        "--out", s(&f.root.join("bp.json")),
    ]);
    assert_eq!(code(&out), 4);
    let err = stderr(&out);
    assert!(err.contains("layout/object mismatch, scene 0"), "{err}");
    assert!(err.contains("no plan line for scenes [1]"), "{err}");
    assert!(!f.root.join("bp.json").exists());
}

#[test]
fn planned_dangling_id_exits_4() {
    let f = fixture(4);
    let replay = write_replay(
        &f,
        "Scene-0: layout=1; objects=[9]; effect_in=none; effect_trans=none; aspect=9:16\n\
         Scene-1: layout=1; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16\n",
    );
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--replay", s(&replay),
        "--out", s(&f.root.join("bp.json")),
    ]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("invalid"), "{}", stderr(&out));
}

#[test]
fn render_mismatches_exit_5() {
    let f = fixture(4);
    let bp_path = f.root.join("bp.json");
    assert_eq!(code(&rava(&["plan", "--annotations", s(&f.ann), "--out", s(&bp_path)])), 0);
    let good: Value = serde_json::from_slice(&fs::read(&bp_path).unwrap()).unwrap();

    let mut dangling = good.clone();
    dangling["plans"][0]["object_ids"] = serde_json::json!([42]);
    let mut wrong_aspect = good.clone();
    wrong_aspect["plans"][1]["aspect"] = Value::from("1:1");
    for (name, bp) in [("dangling", dangling), ("aspect", wrong_aspect)] {
        fs::write(&bp_path, bp.to_string()).unwrap();
        let out = rava(&[
            "render", "--frames", s(&f.frames), "--blueprint", s(&bp_path), "--annotations",
            s(&f.ann), "--out", s(&f.root.join("r")),
        ]);
        assert_eq!(code(&out), 5, "{name}: {}", stderr(&out));
    }

    // Frame count disagrees with the annotations.
    fs::write(&bp_path, good.to_string()).unwrap();
    fs::remove_file(f.frames.join("frame_000007.png")).unwrap();
    let out = rava(&[
        "render", "--frames", s(&f.frames), "--blueprint", s(&bp_path), "--annotations",
        s(&f.ann), "--out", s(&f.root.join("r")),
    ]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

#[test]
fn reframe_writes_all_artifacts() {
    let f = fixture(6);
    let out_dir = f.root.join("out");
    let out = rava(&[
        "reframe", "--frames", s(&f.frames), "--annotations", s(&f.ann), "--aspect", "1:1",
        "--out", s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "2 scene plans, 12 frames");
    let manifest: Value =
        serde_json::from_slice(&fs::read(out_dir.join("run_manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), 13);
    assert!(outputs.contains_key("blueprint.json"));
    let first = image::open(out_dir.join("frames/frame_000000.png")).unwrap();
    assert_eq!((first.width(), first.height()), (180, 180));
}

#[test]
fn square_center_cut_is_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let (video, _) = two_scene_fixture(2);
    let cropped = rava_core::render::center_cut(&video, "1:1".parse().unwrap()).unwrap();
    let input = tmp.path().join("in");
    write_png_dir(&cropped, &input).unwrap();
    let out_dir = tmp.path().join("out");
    let out = rava(&["center-cut", "--frames", s(&input), "--aspect", "1:1", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for i in 0..4 {
        let name = format!("frame_{i:06}.png");
        assert_eq!(fs::read(input.join(&name)).unwrap(), fs::read(out_dir.join(&name)).unwrap());
    }
}

type MaskSpec = (u32, u32, fn(u32, u32) -> u8);

fn write_masks(dir: &Path, masks: &[MaskSpec]) {
    fs::create_dir_all(dir).unwrap();
    for (i, &(w, h, f)) in masks.iter().enumerate() {
        GrayImage::from_fn(w, h, |x, y| Luma([f(x, y)]))
            .save(dir.join(format!("{i:03}.png")))
            .unwrap();
    }
}

#[test]
fn evaluate_identical_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let masks: [MaskSpec; 2] = [
        (20, 10, |x, y| if x > 5 && y < 6 { 255 } else { 0 }),
        (20, 10, |x, _| if x < 3 { 255 } else { 0 }),
    ];
    let (pred, gt) = (tmp.path().join("pred"), tmp.path().join("gt"));
    write_masks(&pred, &masks);
    write_masks(&gt, &masks);
    let report = tmp.path().join("report.json");
    let out = rava(&["evaluate", "--pred", s(&pred), "--gt", s(&gt), "--report", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["mae"], 0.0);
    assert_eq!(v["max_f"], 1.0);
    assert_eq!(v["max_e"], 1.0);
    assert_eq!(v["s_m"], 1.0);
    assert_eq!(v["frame_count"], 2);
    assert_eq!(stdout(&out).as_bytes(), fs::read(&report).unwrap());
    assert!(tmp.path().join("report.manifest.json").exists());
}

#[test]
fn evaluate_mismatches_exit_5() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred, gt) = (tmp.path().join("pred"), tmp.path().join("gt"));
    write_masks(&pred, &[(8, 8, |x, _| if x < 4 { 255 } else { 0 })]);
    write_masks(&gt, &[(8, 6, |x, _| if x < 4 { 255 } else { 0 })]);
    let out = rava(&["evaluate", "--pred", s(&pred), "--gt", s(&gt)]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    fs::rename(gt.join("000.png"), gt.join("001.png")).unwrap();
    let out = rava(&["evaluate", "--pred", s(&pred), "--gt", s(&gt)]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

/// Serves one chat-completion answer, then exits.
fn one_shot_server(content: &'static str) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body).unwrap();
        let answer = serde_json::json!({"choices": [{"message": {"content": content}}]}).to_string();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{answer}",
            answer.len()
        )
        .unwrap();
        String::from_utf8(body).unwrap()
    });
    (format!("http://{addr}"), handle)
}

#[test]
fn record_then_replay() {
    let f = fixture(4);
    let (endpoint, server) = one_shot_server(
        "Sure.\nScene-0: layout=1; objects=[1]; effect_in=none; effect_trans=fade_out; aspect=9:16\n\
         Scene-1: layout=1; objects=[2]; effect_in=zoom_out; effect_trans=none; aspect=9:16",
    );
    let rec = f.root.join("rec");
    let (a, b) = (f.root.join("a.json"), f.root.join("b.json"));
    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--endpoint", &endpoint,
        "--record", s(&rec), "--out", s(&a),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let request: Value = serde_json::from_str(&server.join().unwrap()).unwrap();
    assert_eq!(request["model"], "gpt-4o");
    assert!(request["messages"][0]["content"].as_str().unwrap().contains("Object-2: a white cat"));
    assert_eq!(fs::read_dir(&rec).unwrap().count(), 1);

    let out = rava(&[
        "plan", "--annotations", s(&f.ann), "--mode", "llm", "--replay", s(&rec), "--out", s(&b),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
