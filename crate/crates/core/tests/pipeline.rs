use rava_core::annotation::{load_blueprint, save_blueprint};
use rava_core::frames::{read_png_dir, write_png_dir};
use rava_core::planner::{heuristic_plan, Instruction};
use rava_core::render::{render_video, RenderConfig};
use rava_core::scene::detect_scenes;
use rava_core::synth::two_scene_fixture;
use rava_core::{AspectRatio, SceneDetectConfig};

#[test]
fn detected_scenes_match_annotations() {
    let (video, file) = two_scene_fixture(24);
    let cfg = SceneDetectConfig::new(5.0, 5).unwrap();
    assert_eq!(detect_scenes(&video, &cfg), file.scene_list());
}

#[test]
fn plan_render_round_trip() {
    let (video, file) = two_scene_fixture(12);
    let aspect = AspectRatio::new(4, 5).unwrap();
    let bp = heuristic_plan(&Instruction::new("a white cat").unwrap(), &file, aspect).unwrap();
    assert_eq!(bp.plans[1].object_ids, vec![2]);
    let bp = load_blueprint(&save_blueprint(&bp)).unwrap();

    let cfg = RenderConfig::for_aspect(file.width, file.height, aspect);
    let out = render_video(&video, &bp, &file, &cfg).unwrap();
    assert_eq!(out.len(), video.len());
    assert_eq!((out.width(), out.height()), (144, 180));
    // Last scene has no transition; earlier ones fade to black.
    let black = |i: usize| out.frames()[i].pixels().all(|p| p.0 == [0, 0, 0]);
    assert!(black(11));
    assert!(!black(23));

    let dir = tempfile::tempdir().unwrap();
    write_png_dir(&out, dir.path()).unwrap();
    let back = read_png_dir(dir.path(), video.fps()).unwrap();
    assert_eq!(back.frames(), out.frames());
    assert_eq!(render_video(&video, &bp, &file, &cfg).unwrap().frames(), out.frames());
}
