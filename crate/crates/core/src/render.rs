//! Blueprint execution: crop windows, zoom and fade timelines, resampling.
//!
//! Geometry is in continuous source pixel coordinates where pixel `(x, y)`
//! covers `[x, x+1) × [y, y+1)`. A scene with layout `L` is rendered as `L`
//! full-width bands stacked top to bottom; band `i` shows `object_ids[i]`.

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::AnnotationFile;
use crate::model::{
    validate_blueprint, AspectRatio, BBox, Blueprint, EffectIn, EffectTrans, FrameSequence,
    ModelError, SceneAnnotation, ScenePlan, Violation,
};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("render config: {0}")]
    Config(String),
    #[error("blueprint does not match annotations: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Plan(Vec<Violation>),
    #[error("scene {scene}: object {id} not annotated")]
    MissingObject { scene: usize, id: u32 },
    #[error("scene {scene} covers frames {start}..{end} but the video has {frames}")]
    SceneRange {
        scene: usize,
        start: usize,
        end: usize,
        frames: usize,
    },
    #[error("video is {video_w}x{video_h} but annotations describe {ann_w}x{ann_h}")]
    SourceDims {
        video_w: u32,
        video_h: u32,
        ann_w: u32,
        ann_h: u32,
    },
    #[error("scene {scene} asks for {aspect} but the output is {width}x{height}")]
    Aspect {
        scene: usize,
        aspect: AspectRatio,
        width: u32,
        height: u32,
    },
    #[error("target {target} is wider than the {width}x{height} source")]
    TooWide {
        target: AspectRatio,
        width: u32,
        height: u32,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub out_width: u32,
    pub out_height: u32,
    /// Window scale reached at the end of a zoom-in.
    pub zoom_depth: f64,
    /// Ramp length; `None` means `max(1, min(15, scene_len / 4))`.
    pub fade_frames: Option<usize>,
    /// Padding added to each side of a bbox, as a fraction of its size.
    pub margin: f64,
}

impl RenderConfig {
    pub const DEFAULT_ZOOM_DEPTH: f64 = 0.8;
    pub const DEFAULT_MARGIN: f64 = 0.10;

    pub fn new(out_width: u32, out_height: u32) -> Self {
        Self {
            out_width,
            out_height,
            zoom_depth: Self::DEFAULT_ZOOM_DEPTH,
            fade_frames: None,
            margin: Self::DEFAULT_MARGIN,
        }
    }

    /// Output as large as the biggest window of `aspect` that fits the source.
    pub fn for_aspect(src_w: u32, src_h: u32, aspect: AspectRatio) -> Self {
        let (w, h) = output_dims(src_w, src_h, aspect);
        Self::new(w, h)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.out_width == 0 || self.out_height == 0 {
            return Err(RenderError::Config(format!(
                "output {}x{} has a zero dimension",
                self.out_width, self.out_height
            )));
        }
        if !(self.zoom_depth > 0.0 && self.zoom_depth < 1.0) {
            return Err(RenderError::Config(format!(
                "zoom_depth {} outside (0, 1)",
                self.zoom_depth
            )));
        }
        if self.fade_frames == Some(0) {
            return Err(RenderError::Config("fade_frames must be at least 1".into()));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(RenderError::Config(format!("margin {} is negative", self.margin)));
        }
        Ok(())
    }

    pub fn fade_len(&self, scene_len: usize) -> usize {
        self.fade_frames
            .unwrap_or_else(|| (scene_len / 4).clamp(1, 15))
            .min(scene_len)
    }
}

/// `num / den` rounded to the nearest integer, ties to even.
pub fn div_round_half_even(num: u64, den: u64) -> u64 {
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Largest integer frame of `aspect` inside a `src_w × src_h` source.
pub fn output_dims(src_w: u32, src_h: u32, aspect: AspectRatio) -> (u32, u32) {
    let (aw, ah) = (u64::from(aspect.w()), u64::from(aspect.h()));
    let (sw, sh) = (u64::from(src_w), u64::from(src_h));
    if aw * sh <= ah * sw {
        let w = div_round_half_even(sh * aw, ah).clamp(1, sw);
        (w as u32, src_h)
    } else {
        let h = div_round_half_even(sw * ah, aw).clamp(1, sh);
        (src_w, h as u32)
    }
}

/// An output rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Viewport {
    pub fn aspect(&self) -> f64 {
        f64::from(self.width) / f64::from(self.height)
    }
}

/// `layout` full-width bands; the first `out_height % layout` are one pixel
/// taller.
pub fn layout_viewports(layout: usize, out_width: u32, out_height: u32) -> Vec<Viewport> {
    assert!(layout >= 1, "layout must be positive");
    let n = layout as u32;
    let (base, extra) = (out_height / n, out_height % n);
    let mut y = 0;
    (0..n)
        .map(|i| {
            let height = base + u32::from(i < extra);
            let v = Viewport {
                x: 0,
                y,
                width: out_width,
                height,
            };
            y += height;
            v
        })
        .collect()
}

/// A source rectangle given by center and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropWindow {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl CropWindow {
    pub fn x0(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn y0(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn x1(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y1(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    fn clamped(mut self, src_w: f64, src_h: f64) -> Self {
        let fit = |c: f64, half: f64, len: f64| {
            if 2.0 * half >= len {
                len / 2.0
            } else {
                c.clamp(half, len - half)
            }
        };
        self.cx = fit(self.cx, self.w / 2.0, src_w);
        self.cy = fit(self.cy, self.h / 2.0, src_h);
        self
    }

    /// Maps a source point to output coordinates inside `band`.
    pub fn project(&self, (x, y): (f64, f64), band: &Viewport) -> (f64, f64) {
        (
            f64::from(band.x) + (x - self.x0()) / self.w * f64::from(band.width),
            f64::from(band.y) + (y - self.y0()) / self.h * f64::from(band.height),
        )
    }
}

/// Smallest window of `sub_aspect` (w/h) covering `bbox` plus `margin`.
///
/// Too-large windows shrink uniformly to fit, then the window is translated
/// into the source. The aspect ratio is never changed.
pub fn base_crop(bbox: &BBox, sub_aspect: f64, src: (u32, u32), margin: f64) -> CropWindow {
    let (sw, sh) = (f64::from(src.0), f64::from(src.1));
    let (cx, cy) = bbox.center();
    let ew = bbox.width() * (1.0 + 2.0 * margin);
    let eh = bbox.height() * (1.0 + 2.0 * margin);
    let (mut w, mut h) = if ew / eh >= sub_aspect {
        (ew, ew / sub_aspect)
    } else {
        (eh * sub_aspect, eh)
    };
    if w > sw || h > sh {
        // Snap to the limiting edge exactly.
        (w, h) = (sw, sw / sub_aspect);
        if h > sh {
            (w, h) = (sh * sub_aspect, sh);
        }
    }
    CropWindow { cx, cy, w, h }.clamped(sw, sh)
}

/// Per-frame window scale for an in-scene effect.
pub fn zoom_scales(effect: EffectIn, scene_len: usize, zoom_depth: f64) -> Vec<f64> {
    (0..scene_len)
        .map(|t| {
            let r = if scene_len > 1 {
                t as f64 / (scene_len - 1) as f64
            } else {
                0.0
            };
            match effect {
                EffectIn::None => 1.0,
                EffectIn::ZoomIn => 1.0 + (zoom_depth - 1.0) * r,
                EffectIn::ZoomOut => zoom_depth + (1.0 - zoom_depth) * r,
            }
        })
        .collect()
}

/// Per-frame windows for one subject.
///
/// Each window is `base` scaled by the frame's factor about `anchor` (the
/// subject center), so a subject near a clamped edge stays in view. For an
/// unclamped base the anchor is its own center.
pub fn zoom_timeline(
    base: CropWindow,
    anchor: (f64, f64),
    effect: EffectIn,
    scene_len: usize,
    cfg: &RenderConfig,
    src: (u32, u32),
) -> Vec<CropWindow> {
    let (sw, sh) = (f64::from(src.0), f64::from(src.1));
    zoom_scales(effect, scene_len, cfg.zoom_depth)
        .into_iter()
        .map(|s| {
            if s == 1.0 {
                return base;
            }
            CropWindow {
                cx: anchor.0 + (base.cx - anchor.0) * s,
                cy: anchor.1 + (base.cy - anchor.1) * s,
                w: base.w * s,
                h: base.h * s,
            }
            .clamped(sw, sh)
        })
        .collect()
}

/// Brightness multipliers for a scene-boundary effect.
pub fn fade_weights(effect: EffectTrans, scene_len: usize, cfg: &RenderConfig) -> Vec<f64> {
    let f = cfg.fade_len(scene_len);
    let mut w = vec![1.0; scene_len];
    match effect {
        EffectTrans::None => {}
        EffectTrans::FadeOut => {
            for j in 0..f {
                w[scene_len - f + j] = (f - 1 - j) as f64 / f as f64;
            }
        }
        EffectTrans::FadeIn => {
            for (j, wj) in w.iter_mut().take(f).enumerate() {
                *wj = j as f64 / f as f64;
            }
        }
    }
    w
}

/// Everything needed to produce one scene's output frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropTimeline {
    pub scene_index: usize,
    pub viewports: Vec<Viewport>,
    /// `windows[t][i]` samples band `i` of frame `t`.
    pub windows: Vec<Vec<CropWindow>>,
    pub weights: Vec<f64>,
}

impl CropTimeline {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

fn check_aspect(plan: &ScenePlan, cfg: &RenderConfig) -> Result<(), RenderError> {
    let got = f64::from(cfg.out_width) / f64::from(cfg.out_height);
    let tol = 1.0 / f64::from(cfg.out_width.min(cfg.out_height));
    if (got / plan.aspect.ratio() - 1.0).abs() > tol {
        return Err(RenderError::Aspect {
            scene: plan.scene_index,
            aspect: plan.aspect,
            width: cfg.out_width,
            height: cfg.out_height,
        });
    }
    Ok(())
}

pub fn crop_timeline(
    plan: &ScenePlan,
    ann: &SceneAnnotation,
    src: (u32, u32),
    cfg: &RenderConfig,
) -> Result<CropTimeline, RenderError> {
    cfg.validate()?;
    check_aspect(plan, cfg)?;
    let len = ann.end - ann.start;
    let viewports = layout_viewports(plan.object_ids.len().max(1), cfg.out_width, cfg.out_height);
    let mut per_band = Vec::with_capacity(viewports.len());
    for (&id, band) in plan.object_ids.iter().zip(&viewports) {
        let obj = ann.object(id).ok_or(RenderError::MissingObject {
            scene: plan.scene_index,
            id,
        })?;
        let base = base_crop(&obj.bbox, band.aspect(), src, cfg.margin);
        per_band.push(zoom_timeline(base, obj.bbox.center(), plan.effect_in, len, cfg, src));
    }
    let windows = (0..len)
        .map(|t| per_band.iter().map(|w| w[t]).collect())
        .collect();
    Ok(CropTimeline {
        scene_index: plan.scene_index,
        viewports,
        windows,
        weights: fade_weights(plan.effect_trans, len, cfg),
    })
}

/// Bilinear sample with edge replication.
fn sample(src: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (src.width() as i64, src.height() as i64);
    let (xf, yf) = (x.floor(), y.floor());
    let (fx, fy) = (x - xf, y - yf);
    let (xi, yi) = (xf as i64, yf as i64);
    let px = |x: i64, y: i64| {
        let p = src.get_pixel(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32);
        [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]
    };
    let (a, b) = (px(xi, yi), px(xi + 1, yi));
    let (c, d) = (px(xi, yi + 1), px(xi + 1, yi + 1));
    let mut out = [0.0; 3];
    for k in 0..3 {
        let top = a[k] + (b[k] - a[k]) * fx;
        let bot = c[k] + (d[k] - c[k]) * fx;
        out[k] = top + (bot - top) * fy;
    }
    out
}

fn render_frame(
    src: &RgbImage,
    viewports: &[Viewport],
    windows: &[CropWindow],
    weight: f64,
    out_w: u32,
    out_h: u32,
) -> RgbImage {
    let mut out = RgbImage::new(out_w, out_h);
    for (band, win) in viewports.iter().zip(windows) {
        let sx = win.w / f64::from(band.width);
        let sy = win.h / f64::from(band.height);
        for v in 0..band.height {
            let y = win.y0() + (f64::from(v) + 0.5) * sy - 0.5;
            for u in 0..band.width {
                let x = win.x0() + (f64::from(u) + 0.5) * sx - 0.5;
                let c = sample(src, x, y);
                let px = c.map(|c| (c * weight).round().clamp(0.0, 255.0) as u8);
                out.put_pixel(band.x + u, band.y + v, Rgb(px));
            }
        }
    }
    out
}

pub fn render_scene(
    video: &FrameSequence,
    plan: &ScenePlan,
    ann: &SceneAnnotation,
    cfg: &RenderConfig,
) -> Result<Vec<RgbImage>, RenderError> {
    if ann.end > video.len() || ann.start >= ann.end {
        return Err(RenderError::SceneRange {
            scene: ann.scene_index,
            start: ann.start,
            end: ann.end,
            frames: video.len(),
        });
    }
    let tl = crop_timeline(plan, ann, (video.width(), video.height()), cfg)?;
    let frames = &video.frames()[ann.start..ann.end];
    Ok(frames
        .par_iter()
        .enumerate()
        .map(|(t, src)| {
            render_frame(
                src,
                &tl.viewports,
                &tl.windows[t],
                tl.weights[t],
                cfg.out_width,
                cfg.out_height,
            )
        })
        .collect())
}

pub fn render_video(
    video: &FrameSequence,
    bp: &Blueprint,
    file: &AnnotationFile,
    cfg: &RenderConfig,
) -> Result<FrameSequence, RenderError> {
    cfg.validate()?;
    if (video.width(), video.height()) != (file.width, file.height) {
        return Err(RenderError::SourceDims {
            video_w: video.width(),
            video_h: video.height(),
            ann_w: file.width,
            ann_h: file.height,
        });
    }
    let violations = validate_blueprint(bp, &file.scenes, &file.scene_list());
    if !violations.is_empty() {
        return Err(RenderError::Plan(violations));
    }
    if let Some(last) = file.scenes.last() {
        if last.end != video.len() {
            return Err(RenderError::SceneRange {
                scene: last.scene_index,
                start: last.start,
                end: last.end,
                frames: video.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(video.len());
    for ann in &file.scenes {
        let plan = bp
            .plan_for(ann.scene_index)
            .expect("validated blueprint covers every scene");
        out.extend(render_scene(video, plan, ann, cfg)?);
    }
    Ok(FrameSequence::new(out, video.fps())?)
}

/// Integer window `(x_offset, width)` of the center cut baseline.
pub fn center_cut_window(
    width: u32,
    height: u32,
    aspect: AspectRatio,
) -> Result<(u32, u32), RenderError> {
    let (aw, ah) = (u64::from(aspect.w()), u64::from(aspect.h()));
    if aw * u64::from(height) > ah * u64::from(width) {
        return Err(RenderError::TooWide {
            target: aspect,
            width,
            height,
        });
    }
    let cw = div_round_half_even(u64::from(height) * aw, ah).clamp(1, u64::from(width)) as u32;
    Ok(((width - cw) / 2, cw))
}

/// Full-height crop of the target aspect, horizontally centered.
pub fn center_cut(video: &FrameSequence, aspect: AspectRatio) -> Result<FrameSequence, RenderError> {
    let (x, cw) = center_cut_window(video.width(), video.height(), aspect)?;
    let h = video.height();
    let frames = video
        .frames()
        .par_iter()
        .map(|f| image::imageops::crop_imm(f, x, 0, cw, h).to_image())
        .collect();
    Ok(FrameSequence::new(frames, video.fps())?)
}
