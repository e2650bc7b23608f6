//! Deterministic synthetic videos and matching annotations for tests and demos.

use image::{Rgb, RgbImage};

use crate::annotation::AnnotationFile;
use crate::model::{BBox, BinaryGrid, FrameSequence, Mask, ObjectRecord, SceneAnnotation};

/// A run of frames with one background color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shot {
    pub len: usize,
    pub color: [u8; 3],
    /// Brightness added per frame, to keep a shot from being perfectly static.
    pub drift: i16,
}

fn texture(x: u32, y: u32) -> i16 {
    ((x * 3 + y * 5) % 16) as i16
}

fn shade(c: u8, delta: i16) -> u8 {
    (i16::from(c) + delta).clamp(0, 255) as u8
}

/// Textured frames, shot after shot.
pub fn shots(width: u32, height: u32, list: &[Shot], fps: f64) -> FrameSequence {
    let mut frames = Vec::new();
    for shot in list {
        for t in 0..shot.len {
            let d = shot.drift * t as i16;
            frames.push(RgbImage::from_fn(width, height, |x, y| {
                let n = texture(x, y) + d;
                Rgb(shot.color.map(|c| shade(c, n)))
            }));
        }
    }
    FrameSequence::new(frames, fps).expect("shots produce at least one frame")
}

/// One colored rectangle with its caption, in pixel-edge coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub id: u32,
    pub caption: String,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub color: [u8; 3],
}

impl Rect {
    pub fn new(id: u32, caption: &str, [x0, y0, x1, y1]: [u32; 4], color: [u8; 3]) -> Self {
        Self {
            id,
            caption: caption.into(),
            x0,
            y0,
            x1,
            y1,
            color,
        }
    }

    fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn object(&self, width: u32, height: u32) -> ObjectRecord {
        let grid = BinaryGrid::from_fn(width, height, |x, y| self.contains(x, y));
        ObjectRecord {
            id: self.id,
            caption: self.caption.clone(),
            bbox: BBox::new(self.x0.into(), self.y0.into(), self.x1.into(), self.y1.into()),
            mask: Mask::from_grid(&grid),
        }
    }
}

/// A scene of `len` frames: a plain background with static rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub len: usize,
    pub background: [u8; 3],
    pub rects: Vec<Rect>,
}

/// Frames and annotations for a list of scenes, keyframes at scene midpoints.
pub fn annotated(
    video_id: &str,
    width: u32,
    height: u32,
    fps: f64,
    scenes: &[SyntheticScene],
) -> (FrameSequence, AnnotationFile) {
    let mut frames = Vec::new();
    let mut anns = Vec::new();
    for (i, s) in scenes.iter().enumerate() {
        let start = frames.len();
        let frame = RgbImage::from_fn(width, height, |x, y| {
            let color = s
                .rects
                .iter()
                .rev()
                .find(|r| r.contains(x, y))
                .map_or(s.background, |r| r.color);
            Rgb(color)
        });
        frames.extend(std::iter::repeat_n(frame, s.len));
        anns.push(SceneAnnotation {
            scene_index: i,
            start,
            end: start + s.len,
            keyframe: start + s.len / 2,
            objects: s.rects.iter().map(|r| r.object(width, height)).collect(),
        });
    }
    let video = FrameSequence::new(frames, fps).expect("scenes produce at least one frame");
    let file = AnnotationFile {
        video_id: video_id.into(),
        width,
        height,
        fps,
        scenes: anns,
    };
    (video, file)
}

/// Two 320x180 scenes of `len` frames each. Scene 0 holds a red ball and a
/// green box, scene 1 a yellow dog and a white cat.
pub fn two_scene_fixture(len: usize) -> (FrameSequence, AnnotationFile) {
    let scenes = [
        SyntheticScene {
            len,
            background: [60, 60, 60],
            rects: vec![
                Rect::new(1, "a red ball", [40, 60, 80, 120], [220, 30, 30]),
                Rect::new(2, "a green box", [200, 50, 260, 130], [30, 200, 40]),
            ],
        },
        SyntheticScene {
            len,
            background: [20, 30, 120],
            rects: vec![
                Rect::new(1, "a yellow dog", [130, 40, 190, 140], [235, 220, 40]),
                Rect::new(2, "a white cat", [20, 20, 60, 60], [245, 245, 245]),
            ],
        },
    ];
    annotated("two_scene", 320, 180, 30.0, &scenes)
}
