//! Content-based shot detection.
//!
//! Each adjacent frame pair gets a content score: the per-pixel mean of the
//! absolute H, S and V differences, with all three channels on a 0..255
//! scale and hue treated as circular. A cut is placed before frame `i` when
//! the score reaches `alpha1` and the scene being built already holds at
//! least `alpha2` frames.

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FrameSequence, Scene, SceneDetectConfig};

/// Hue is mapped onto a circle of this circumference.
const HUE_SCALE: f64 = 256.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SceneError {
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentScore {
    /// Index of the later frame of the pair (always >= 1).
    pub frame_index: usize,
    pub score: f64,
}

/// RGB (0..255) to HSV with every channel on a 0..255 scale; hue in [0, 256).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max * 255.0 } else { 0.0 };
    let hue_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    [hue_deg / 360.0 * HUE_SCALE, s, max]
}

fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(HUE_SCALE - d)
}

/// Mean over pixels of `(|dH| + |dS| + |dV|) / 3`.
pub fn content_score(prev: &RgbImage, cur: &RgbImage) -> Result<f64, SceneError> {
    if prev.dimensions() != cur.dimensions() {
        let (a, b) = prev.dimensions();
        let (c, d) = cur.dimensions();
        return Err(SceneError::DimensionMismatch(a, b, c, d));
    }
    let n = prev.pixels().len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = prev
        .pixels()
        .zip(cur.pixels())
        .map(|(p, c)| {
            let [h0, s0, v0] = rgb_to_hsv(p.0);
            let [h1, s1, v1] = rgb_to_hsv(c.0);
            (hue_distance(h0, h1) + (s0 - s1).abs() + (v0 - v1).abs()) / 3.0
        })
        .sum();
    Ok(total / n as f64)
}

/// Scores for every adjacent pair, computed in parallel.
pub fn content_scores(video: &FrameSequence) -> Vec<ContentScore> {
    let frames = video.frames();
    (1..frames.len())
        .into_par_iter()
        .map(|i| ContentScore {
            frame_index: i,
            score: content_score(&frames[i - 1], &frames[i])
                .expect("frames in a sequence share dimensions"),
        })
        .collect()
}

/// Applies the cut rule to precomputed scores.
///
/// `scores[k]` must belong to frame `k + 1`.
pub fn scenes_from_scores(
    scores: &[ContentScore],
    frame_count: usize,
    cfg: &SceneDetectConfig,
) -> Vec<Scene> {
    if frame_count == 0 {
        return Vec::new();
    }
    let mut scenes = Vec::new();
    let mut start = 0usize;
    for s in scores {
        let i = s.frame_index;
        if i == 0 || i >= frame_count {
            continue;
        }
        if s.score >= cfg.alpha1 && i - start >= cfg.alpha2 {
            scenes.push(Scene::new(scenes.len(), start, i));
            start = i;
        }
    }
    scenes.push(Scene::new(scenes.len(), start, frame_count));
    scenes
}

pub fn detect_scenes(video: &FrameSequence, cfg: &SceneDetectConfig) -> Vec<Scene> {
    scenes_from_scores(&content_scores(video), video.len(), cfg)
}
