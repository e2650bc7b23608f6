//! Shared domain types.
//!
//! Everything in here is an immutable value type. Constructors validate the
//! invariants that the rest of the pipeline relies on; pixel math lives in
//! [`crate::render`] and [`crate::metrics`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rle;

pub const DEFAULT_FPS: f64 = 30.0;

/// Largest layout the renderer supports (number of stacked sub-windows).
pub const MAX_LAYOUT: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("frame sequence is empty")]
    EmptySequence,
    #[error("frame {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    FrameDims {
        index: usize,
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("invalid fps {0}")]
    Fps(f64),
    #[error("invalid bbox {0:?} for a {1}x{2} frame")]
    BBox([f64; 4], u32, u32),
    #[error("rle runs sum to {got}, expected {want}")]
    RunSum { got: u64, want: u64 },
    #[error("invalid aspect ratio {0:?}")]
    Aspect(String),
    #[error("unknown effect token {0:?}")]
    Effect(String),
    #[error("scene partition: {0}")]
    Partition(String),
    #[error("scene detection config: {0}")]
    DetectConfig(String),
    #[error("object {id}: {message}")]
    Object { id: u32, message: String },
    #[error("scene {scene}: {message}")]
    Annotation { scene: usize, message: String },
}

/// An ordered list of equally sized RGB frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: u32,
    height: u32,
    fps: f64,
    frames: Vec<RgbImage>,
}

impl FrameSequence {
    pub fn new(frames: Vec<RgbImage>, fps: f64) -> Result<Self, ModelError> {
        let first = frames.first().ok_or(ModelError::EmptySequence)?;
        let (width, height) = first.dimensions();
        if width == 0 || height == 0 {
            return Err(ModelError::FrameDims {
                index: 0,
                got_w: width,
                got_h: height,
                want_w: width.max(1),
                want_h: height.max(1),
            });
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(ModelError::Fps(fps));
        }
        for (index, frame) in frames.iter().enumerate() {
            let (w, h) = frame.dimensions();
            if (w, h) != (width, height) {
                return Err(ModelError::FrameDims {
                    index,
                    got_w: w,
                    got_h: h,
                    want_w: width,
                    want_h: height,
                });
            }
        }
        Ok(Self {
            width,
            height,
            fps,
            frames,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[RgbImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; a sequence holds at least one frame.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<RgbImage> {
        self.frames
    }
}

/// A half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl Scene {
    pub fn new(index: usize, start: usize, end: usize) -> Self {
        Self { index, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn midpoint(&self) -> usize {
        self.start + self.len() / 2
    }
}

/// Checks that `scenes` tile `[0, frame_count)` in order with no gap or overlap.
pub fn check_partition(scenes: &[Scene], frame_count: usize) -> Result<(), ModelError> {
    let mut cursor = 0usize;
    for (i, scene) in scenes.iter().enumerate() {
        if scene.index != i {
            return Err(ModelError::Partition(format!(
                "scene at position {i} has index {}",
                scene.index
            )));
        }
        if scene.start != cursor {
            return Err(ModelError::Partition(format!(
                "scene {i} starts at {} but previous scene ended at {cursor}",
                scene.start
            )));
        }
        if scene.start >= scene.end {
            return Err(ModelError::Partition(format!(
                "scene {i} is empty ({}..{})",
                scene.start, scene.end
            )));
        }
        cursor = scene.end;
    }
    if cursor != frame_count {
        return Err(ModelError::Partition(format!(
            "scenes cover {cursor} frames, video has {frame_count}"
        )));
    }
    Ok(())
}

/// Axis-aligned box in pixel-edge coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self::new(0.0, 0.0, f64::from(width), f64::from(height))
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<(), ModelError> {
        let (w, h) = (f64::from(width), f64::from(height));
        let finite = [self.x1, self.y1, self.x2, self.y2]
            .iter()
            .all(|v| v.is_finite());
        if finite
            && 0.0 <= self.x1
            && self.x1 < self.x2
            && self.x2 <= w
            && 0.0 <= self.y1
            && self.y1 < self.y2
            && self.y2 <= h
        {
            Ok(())
        } else {
            Err(ModelError::BBox(self.into(), width, height))
        }
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl From<&BBox> for [f64; 4] {
    fn from(b: &BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryGrid {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    /// Builds a grid from row-major data; `None` if the length is wrong.
    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight pixel-edge bounding box of the set pixels, `None` if empty.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bounds.map(|(x0, y0, x1, y1)| {
            BBox::new(
                f64::from(x0),
                f64::from(y0),
                f64::from(x1 + 1),
                f64::from(y1 + 1),
            )
        })
    }
}

/// Binary mask stored as column-major RLE, starting with a run of zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl Mask {
    pub fn new(width: u32, height: u32, runs: Vec<u32>) -> Result<Self, ModelError> {
        let got: u64 = runs.iter().map(|&r| u64::from(r)).sum();
        let want = u64::from(width) * u64::from(height);
        if got != want {
            return Err(ModelError::RunSum { got, want });
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    pub fn from_grid(grid: &BinaryGrid) -> Self {
        Self {
            width: grid.width(),
            height: grid.height(),
            runs: rle::encode_rle(grid),
        }
    }

    pub fn to_grid(&self) -> BinaryGrid {
        rle::decode_rle(&self.runs, self.width, self.height)
            .expect("run sum checked at construction")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    /// Number of foreground pixels (sum of the odd-position runs).
    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).map(|&r| u64::from(r)).sum()
    }
}

/// One grounded object: caption, box and mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub id: u32,
    pub caption: String,
    pub bbox: BBox,
    pub mask: Mask,
}

impl ObjectRecord {
    /// Checks mask dimensions and that `bbox` is the tight box of the mask
    /// within one pixel on every side.
    pub fn validate(&self, width: u32, height: u32) -> Result<(), ModelError> {
        let err = |message: String| ModelError::Object {
            id: self.id,
            message,
        };
        if (self.mask.width(), self.mask.height()) != (width, height) {
            return Err(err(format!(
                "mask is {}x{}, frame is {width}x{height}",
                self.mask.width(),
                self.mask.height()
            )));
        }
        self.bbox
            .validate(width, height)
            .map_err(|e| err(e.to_string()))?;
        let tight = self
            .mask
            .to_grid()
            .bounding_box()
            .ok_or_else(|| err("mask is empty".into()))?;
        let got: [f64; 4] = self.bbox.into();
        let want: [f64; 4] = tight.into();
        if got.iter().zip(want).any(|(g, w)| (g - w).abs() > 1.0) {
            return Err(err(format!(
                "bbox {got:?} is not the tight box {want:?} of its mask"
            )));
        }
        Ok(())
    }
}

/// Grounded objects for one scene, extracted from a single keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnnotation {
    pub scene_index: usize,
    pub start: usize,
    pub end: usize,
    pub keyframe: usize,
    pub objects: Vec<ObjectRecord>,
}

impl SceneAnnotation {
    pub fn scene(&self) -> Scene {
        Scene::new(self.scene_index, self.start, self.end)
    }

    pub fn object(&self, id: u32) -> Option<&ObjectRecord> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn validate(&self, width: u32, height: u32) -> Result<(), ModelError> {
        let err = |message: String| ModelError::Annotation {
            scene: self.scene_index,
            message,
        };
        if self.start >= self.end {
            return Err(err(format!("empty interval {}..{}", self.start, self.end)));
        }
        if !(self.start <= self.keyframe && self.keyframe < self.end) {
            return Err(err(format!(
                "keyframe {} outside {}..{}",
                self.keyframe, self.start, self.end
            )));
        }
        let mut seen = BTreeSet::new();
        for object in &self.objects {
            if !seen.insert(object.id) {
                return Err(err(format!("duplicate object id {}", object.id)));
            }
            object.validate(width, height)?;
        }
        Ok(())
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Width:height ratio, always stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AspectRatio {
    w: u32,
    h: u32,
}

impl AspectRatio {
    pub fn new(w: u32, h: u32) -> Result<Self, ModelError> {
        if w == 0 || h == 0 {
            return Err(ModelError::Aspect(format!("{w}:{h}")));
        }
        let g = gcd(w, h);
        Ok(Self { w: w / g, h: h / g })
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn ratio(&self) -> f64 {
        f64::from(self.w) / f64::from(self.h)
    }
}

impl fmt::Display for AspectRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.w, self.h)
    }
}

impl FromStr for AspectRatio {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::Aspect(s.to_string());
        let (w, h) = s.trim().split_once(':').ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        Self::new(w, h)
    }
}

impl TryFrom<String> for AspectRatio {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AspectRatio> for String {
    fn from(a: AspectRatio) -> Self {
        a.to_string()
    }
}

/// Normalizes an effect token: lowercase, `-` and spaces become `_`.
fn normalize_token(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == '-' || c == ' ' { '_' } else { c })
        .collect()
}

/// In-scene effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectIn {
    ZoomIn,
    ZoomOut,
    None,
}

impl EffectIn {
    pub const ALL: [EffectIn; 3] = [EffectIn::ZoomIn, EffectIn::ZoomOut, EffectIn::None];

    pub fn as_str(&self) -> &'static str {
        match self {
            EffectIn::ZoomIn => "zoom_in",
            EffectIn::ZoomOut => "zoom_out",
            EffectIn::None => "none",
        }
    }
}

impl fmt::Display for EffectIn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EffectIn {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "zoom_in" => Ok(EffectIn::ZoomIn),
            "zoom_out" => Ok(EffectIn::ZoomOut),
            "none" => Ok(EffectIn::None),
            _ => Err(ModelError::Effect(s.to_string())),
        }
    }
}

/// Scene-boundary transition (fade to or from black).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectTrans {
    FadeIn,
    FadeOut,
    None,
}

impl EffectTrans {
    pub const ALL: [EffectTrans; 3] = [EffectTrans::FadeIn, EffectTrans::FadeOut, EffectTrans::None];

    pub fn as_str(&self) -> &'static str {
        match self {
            EffectTrans::FadeIn => "fade_in",
            EffectTrans::FadeOut => "fade_out",
            EffectTrans::None => "none",
        }
    }
}

impl fmt::Display for EffectTrans {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EffectTrans {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_token(s).as_str() {
            "fade_in" => Ok(EffectTrans::FadeIn),
            "fade_out" => Ok(EffectTrans::FadeOut),
            "none" => Ok(EffectTrans::None),
            _ => Err(ModelError::Effect(s.to_string())),
        }
    }
}

/// Layout, subjects and effects for one scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePlan {
    pub scene_index: usize,
    pub layout: usize,
    pub object_ids: Vec<u32>,
    pub effect_in: EffectIn,
    pub effect_trans: EffectTrans,
    pub aspect: AspectRatio,
}

/// The execution plan for a whole video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blueprint {
    pub video_id: String,
    pub plans: Vec<ScenePlan>,
}

impl Blueprint {
    pub fn plan_for(&self, scene_index: usize) -> Option<&ScenePlan> {
        self.plans.iter().find(|p| p.scene_index == scene_index)
    }
}

/// Shot detection parameters: content-score threshold and minimum scene length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDetectConfig {
    pub alpha1: f64,
    pub alpha2: usize,
}

impl SceneDetectConfig {
    pub fn new(alpha1: f64, alpha2: usize) -> Result<Self, ModelError> {
        let cfg = Self { alpha1, alpha2 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha1.is_finite() && self.alpha1 > 0.0 && self.alpha1 <= 255.0) {
            return Err(ModelError::DetectConfig(format!(
                "alpha1 must be in (0, 255], got {}",
                self.alpha1
            )));
        }
        if self.alpha2 == 0 {
            return Err(ModelError::DetectConfig(
                "alpha2 (minimum scene length) must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Dataset-level saliency scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub mae: f64,
    pub max_f: f64,
    pub max_e: f64,
    pub s_m: f64,
    pub frame_count: usize,
}

/// A single broken blueprint invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub scene_index: usize,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(scene_index: usize, field: &str, message: impl Into<String>) -> Self {
        Self {
            scene_index,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scene {}: {}: {}", self.scene_index, self.field, self.message)
    }
}

/// Checks a blueprint against the scene partition and the annotations.
///
/// The result is sorted, so it does not depend on the order of
/// `bp.plans`. An empty list means the blueprint is renderable.
pub fn validate_blueprint(
    bp: &Blueprint,
    annotations: &[SceneAnnotation],
    scenes: &[Scene],
) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    let scene_set: BTreeSet<usize> = scenes.iter().map(|s| s.index).collect();
    let by_scene: BTreeMap<usize, &SceneAnnotation> =
        annotations.iter().map(|a| (a.scene_index, a)).collect();

    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for plan in &bp.plans {
        *counts.entry(plan.scene_index).or_default() += 1;
    }
    for (&idx, &n) in &counts {
        if n > 1 {
            out.insert(Violation::new(
                idx,
                "scene_index",
                format!("scene has {n} plans"),
            ));
        }
        if !scene_set.contains(&idx) {
            out.insert(Violation::new(idx, "scene_index", "no such scene"));
        }
    }
    for &idx in scene_set.difference(&counts.keys().copied().collect()) {
        out.insert(Violation::new(idx, "plans", "scene has no plan"));
    }

    for plan in &bp.plans {
        let idx = plan.scene_index;
        if !(1..=MAX_LAYOUT).contains(&plan.layout) {
            out.insert(Violation::new(
                idx,
                "layout",
                format!("layout {} outside 1..={MAX_LAYOUT}", plan.layout),
            ));
        } else if plan.layout != plan.object_ids.len() {
            out.insert(Violation::new(
                idx,
                "layout",
                format!(
                    "layout {} but {} object ids",
                    plan.layout,
                    plan.object_ids.len()
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        for &id in &plan.object_ids {
            if !seen.insert(id) {
                out.insert(Violation::new(
                    idx,
                    "object_ids",
                    format!("object {id} listed twice"),
                ));
            }
        }
        match by_scene.get(&idx) {
            Some(ann) => {
                for &id in &plan.object_ids {
                    if ann.object(id).is_none() {
                        out.insert(Violation::new(
                            idx,
                            "object_ids",
                            format!("object {id} not in annotation"),
                        ));
                    }
                }
            }
            None if scene_set.contains(&idx) => {
                out.insert(Violation::new(idx, "object_ids", "scene has no annotation"));
            }
            None => {}
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_object(id: u32, x0: u32, y0: u32, side: u32, w: u32, h: u32) -> ObjectRecord {
        let grid = BinaryGrid::from_fn(w, h, |x, y| {
            (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)
        });
        ObjectRecord {
            id,
            caption: format!("object {id}"),
            bbox: grid.bounding_box().unwrap(),
            mask: Mask::from_grid(&grid),
        }
    }

    fn two_scene_fixture() -> (Vec<Scene>, Vec<SceneAnnotation>, Blueprint) {
        let scenes = vec![Scene::new(0, 0, 10), Scene::new(1, 10, 20)];
        let annotations = scenes
            .iter()
            .map(|s| SceneAnnotation {
                scene_index: s.index,
                start: s.start,
                end: s.end,
                keyframe: s.midpoint(),
                objects: vec![square_object(1, 0, 0, 2, 8, 8), square_object(3, 4, 4, 3, 8, 8)],
            })
            .collect();
        let aspect = AspectRatio::new(9, 16).unwrap();
        let bp = Blueprint {
            video_id: "v".into(),
            plans: vec![
                ScenePlan {
                    scene_index: 0,
                    layout: 2,
                    object_ids: vec![1, 3],
                    effect_in: EffectIn::ZoomIn,
                    effect_trans: EffectTrans::FadeOut,
                    aspect,
                },
                ScenePlan {
                    scene_index: 1,
                    layout: 1,
                    object_ids: vec![3],
                    effect_in: EffectIn::None,
                    effect_trans: EffectTrans::None,
                    aspect,
                },
            ],
        };
        (scenes, annotations, bp)
    }

    #[test]
    fn well_formed_blueprint_has_no_violations() {
        let (scenes, annotations, bp) = two_scene_fixture();
        assert!(validate_blueprint(&bp, &annotations, &scenes).is_empty());
    }

    #[test]
    fn layout_count_mismatch_is_one_layout_violation() {
        let (scenes, annotations, mut bp) = two_scene_fixture();
        bp.plans[0].object_ids = vec![1];
        let v = validate_blueprint(&bp, &annotations, &scenes);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "layout");
        assert_eq!(v[0].scene_index, 0);
    }

    #[test]
    fn dangling_object_reference() {
        let (scenes, annotations, mut bp) = two_scene_fixture();
        bp.plans[1].object_ids = vec![99];
        let v = validate_blueprint(&bp, &annotations, &scenes);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "object_ids");
    }

    #[test]
    fn missing_and_duplicate_plans() {
        let (scenes, annotations, mut bp) = two_scene_fixture();
        let dup = bp.plans[0].clone();
        bp.plans[1] = dup;
        let v = validate_blueprint(&bp, &annotations, &scenes);
        let fields: Vec<_> = v.iter().map(|v| (v.scene_index, v.field.as_str())).collect();
        assert_eq!(fields, vec![(0, "scene_index"), (1, "plans")]);
    }

    #[test]
    fn violations_do_not_depend_on_plan_order() {
        let (scenes, annotations, mut bp) = two_scene_fixture();
        bp.plans[0].layout = 3;
        bp.plans[1].object_ids = vec![7];
        let forward = validate_blueprint(&bp, &annotations, &scenes);
        bp.plans.reverse();
        assert_eq!(forward, validate_blueprint(&bp, &annotations, &scenes));
        assert_eq!(forward.len(), 2);
    }

    #[test]
    fn layout_cap() {
        let (scenes, annotations, mut bp) = two_scene_fixture();
        bp.plans[0].layout = 4;
        bp.plans[0].object_ids = vec![1, 3, 5, 6];
        let v = validate_blueprint(&bp, &annotations, &scenes);
        assert!(v.iter().any(|v| v.field == "layout"));
    }

    #[test]
    fn partition_checks() {
        let ok = [Scene::new(0, 0, 40), Scene::new(1, 40, 80)];
        assert!(check_partition(&ok, 80).is_ok());
        assert!(check_partition(&ok, 81).is_err());
        let gap = [Scene::new(0, 0, 40), Scene::new(1, 41, 80)];
        assert!(check_partition(&gap, 80).is_err());
        let empty = [Scene::new(0, 0, 0)];
        assert!(check_partition(&empty, 0).is_err());
    }

    #[test]
    fn aspect_normalizes() {
        let a: AspectRatio = "18:32".parse().unwrap();
        assert_eq!((a.w(), a.h()), (9, 16));
        assert_eq!(a.to_string(), "9:16");
        assert!("0:3".parse::<AspectRatio>().is_err());
        assert!("916".parse::<AspectRatio>().is_err());
    }

    #[test]
    fn effect_tokens() {
        assert_eq!("Zoom-In".parse::<EffectIn>().unwrap(), EffectIn::ZoomIn);
        assert_eq!("fade out".parse::<EffectTrans>().unwrap(), EffectTrans::FadeOut);
        assert!("zoom".parse::<EffectIn>().is_err());
    }

    #[test]
    fn object_tightness_tolerance() {
        let mut obj = square_object(1, 2, 2, 3, 8, 8);
        assert!(obj.validate(8, 8).is_ok());
        obj.bbox.x2 += 1.0;
        assert!(obj.validate(8, 8).is_ok());
        obj.bbox.x2 += 1.0;
        assert!(obj.validate(8, 8).is_err());
        assert!(square_object(1, 2, 2, 3, 8, 8).validate(9, 8).is_err());
    }

    #[test]
    fn frame_sequence_rejects_mixed_dims() {
        let a = RgbImage::new(4, 4);
        let b = RgbImage::new(4, 5);
        assert!(matches!(
            FrameSequence::new(vec![a.clone(), b], 30.0),
            Err(ModelError::FrameDims { index: 1, .. })
        ));
        assert!(FrameSequence::new(vec![], 30.0).is_err());
        assert!(FrameSequence::new(vec![a], 0.0).is_err());
    }

    #[test]
    fn detect_config_bounds() {
        assert!(SceneDetectConfig::new(5.0, 5).is_ok());
        assert!(SceneDetectConfig::new(0.0, 5).is_err());
        assert!(SceneDetectConfig::new(5.0, 0).is_err());
        assert!(SceneDetectConfig::new(300.0, 5).is_err());
    }
}
