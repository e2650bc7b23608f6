//! Saliency evaluation: MAE, max F-measure, max E-measure and S-measure.
//!
//! F and E are evaluated at the 256 thresholds `t = k / 255`, binarizing the
//! prediction as `s > t`. Per-pixel threshold membership is collected into a
//! histogram once, so both curves cost O(pixels + 256).
//!
//! For a dataset, MAE and S are averaged over frames; the F and E curves are
//! averaged per threshold first and the maximum is taken afterwards.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::MetricReport;

pub const THRESHOLDS: usize = 256;
pub const BETA_SQ: f64 = 0.3;
pub const E_EPS: f64 = 1e-12;
/// Weight of the object term in the S-measure.
pub const S_ALPHA: f64 = 0.5;
/// Weight of the dispersion term inside the object similarity.
pub const S_LAMBDA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: prediction {0}x{1}, ground truth {2}x{3}")]
    DimMismatch(u32, u32, u32, u32),
    #[error("ground truth has no foreground pixels")]
    EmptyForeground,
    #[error("value buffer has {got} entries, expected {want}")]
    BufferLen { got: usize, want: usize },
    #[error("saliency value {0} outside [0, 1]")]
    Range(f64),
    #[error("frame {frame}: {source}")]
    Frame {
        frame: String,
        #[source]
        source: Box<MetricError>,
    },
    #[error("file sets differ: only in predictions {only_pred:?}, only in ground truth {only_gt:?}")]
    FileSets {
        only_pred: Vec<String>,
        only_gt: Vec<String>,
    },
    #[error("no frames to evaluate")]
    NoFrames,
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Grayscale prediction in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, MetricError> {
        let want = width as usize * height as usize;
        if values.len() != want {
            return Err(MetricError::BufferLen {
                got: values.len(),
                want,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(MetricError::Range(bad));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_gray8(width: u32, height: u32, bytes: &[u8]) -> Result<Self, MetricError> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Binary ground truth, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    width: u32,
    height: u32,
    values: Vec<bool>,
}

impl GroundTruth {
    pub fn new(width: u32, height: u32, values: Vec<bool>) -> Result<Self, MetricError> {
        let want = width as usize * height as usize;
        if values.len() != want {
            return Err(MetricError::BufferLen {
                got: values.len(),
                want,
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Pixels above 127 are foreground.
    pub fn from_gray8(width: u32, height: u32, bytes: &[u8]) -> Result<Self, MetricError> {
        Self::new(width, height, bytes.iter().map(|&b| b > 127).collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn foreground(&self) -> usize {
        self.values.iter().filter(|&&g| g).count()
    }
}

fn check_dims(s: &SaliencyMap, g: &GroundTruth) -> Result<(), MetricError> {
    if (s.width, s.height) != (g.width, g.height) {
        return Err(MetricError::DimMismatch(s.width, s.height, g.width, g.height));
    }
    Ok(())
}

pub fn mae(s: &SaliencyMap, g: &GroundTruth) -> Result<f64, MetricError> {
    check_dims(s, g)?;
    let n = s.values.len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = s
        .values
        .iter()
        .zip(&g.values)
        .map(|(&sv, &gv)| (sv - if gv { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(total / n as f64)
}

/// Largest `k` in `0..=255` with `s > k / 255`, or -1 when `s` exceeds none.
fn highest_exceeded(s: f64) -> i32 {
    let mut k = ((s * 255.0).ceil() as i32 - 1).clamp(-1, 255);
    while k < 255 && s > f64::from(k + 1) / 255.0 {
        k += 1;
    }
    while k >= 0 && s <= f64::from(k) / 255.0 {
        k -= 1;
    }
    k
}

/// Confusion counts at every threshold.
#[derive(Debug, Clone)]
pub struct ThresholdCounts {
    /// True positives at threshold `k`.
    pub tp: Vec<u64>,
    /// False positives at threshold `k`.
    pub fp: Vec<u64>,
    pub foreground: u64,
    pub total: u64,
}

pub fn threshold_counts(s: &SaliencyMap, g: &GroundTruth) -> Result<ThresholdCounts, MetricError> {
    check_dims(s, g)?;
    // Slot k + 1 holds pixels whose highest exceeded threshold is k.
    let mut fg_hist = [0u64; THRESHOLDS + 1];
    let mut bg_hist = [0u64; THRESHOLDS + 1];
    for (&sv, &gv) in s.values.iter().zip(&g.values) {
        let slot = (highest_exceeded(sv) + 1) as usize;
        if gv {
            fg_hist[slot] += 1;
        } else {
            bg_hist[slot] += 1;
        }
    }
    let mut tp = vec![0u64; THRESHOLDS];
    let mut fp = vec![0u64; THRESHOLDS];
    let (mut acc_tp, mut acc_fp) = (0u64, 0u64);
    for k in (0..THRESHOLDS).rev() {
        acc_tp += fg_hist[k + 1];
        acc_fp += bg_hist[k + 1];
        tp[k] = acc_tp;
        fp[k] = acc_fp;
    }
    Ok(ThresholdCounts {
        tp,
        fp,
        foreground: fg_hist.iter().sum(),
        total: s.values.len() as u64,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// F-measure at each of the 256 thresholds.
pub fn f_curve(s: &SaliencyMap, g: &GroundTruth) -> Result<Vec<f64>, MetricError> {
    let c = threshold_counts(s, g)?;
    if c.foreground == 0 {
        return Err(MetricError::EmptyForeground);
    }
    Ok((0..THRESHOLDS)
        .map(|k| {
            let tp = c.tp[k] as f64;
            let precision = ratio(tp, (c.tp[k] + c.fp[k]) as f64);
            let recall = ratio(tp, c.foreground as f64);
            ratio(
                (1.0 + BETA_SQ) * precision * recall,
                BETA_SQ * precision + recall,
            )
        })
        .collect())
}

pub fn max_f(s: &SaliencyMap, g: &GroundTruth) -> Result<f64, MetricError> {
    Ok(f_curve(s, g)?.into_iter().fold(0.0, f64::max))
}

fn enhanced(phi_b: f64, phi_g: f64) -> f64 {
    let xi = 2.0 * phi_g * phi_b / (phi_g * phi_g + phi_b * phi_b + E_EPS);
    (1.0 + xi) * (1.0 + xi) / 4.0
}

/// E-measure at each of the 256 thresholds.
pub fn e_curve(s: &SaliencyMap, g: &GroundTruth) -> Result<Vec<f64>, MetricError> {
    let c = threshold_counts(s, g)?;
    let n = c.total as f64;
    if c.total == 0 {
        return Ok(vec![0.0; THRESHOLDS]);
    }
    let fg = c.foreground;
    let mean_g = fg as f64 / n;
    Ok((0..THRESHOLDS)
        .map(|k| {
            let tp = c.tp[k];
            let fp = c.fp[k];
            let fneg = fg - tp;
            let tn = c.total - fg - fp;
            let mean_b = (tp + fp) as f64 / n;
            if fg == c.total {
                mean_b
            } else if fg == 0 {
                1.0 - mean_b
            } else {
                // Binary maps take only four (B, G) combinations.
                let cells = [
                    (tp, 1.0, 1.0),
                    (fp, 1.0, 0.0),
                    (fneg, 0.0, 1.0),
                    (tn, 0.0, 0.0),
                ];
                cells
                    .iter()
                    .map(|&(count, b, gv)| count as f64 * enhanced(b - mean_b, gv - mean_g))
                    .sum::<f64>()
                    / n
            }
        })
        .collect())
}

pub fn max_e(s: &SaliencyMap, g: &GroundTruth) -> Result<f64, MetricError> {
    Ok(e_curve(s, g)?.into_iter().fold(0.0, f64::max))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Foreground/background similarity of a region's values to an all-one map.
fn object_similarity(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (mean, std) = mean_std(values);
    2.0 * mean / (mean * mean + 1.0 + 2.0 * S_LAMBDA * std)
}

fn s_object(s: &SaliencyMap, g: &GroundTruth) -> f64 {
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for (&sv, &gv) in s.values.iter().zip(&g.values) {
        if gv {
            fg.push(sv);
        } else {
            bg.push(1.0 - sv);
        }
    }
    let mu = fg.len() as f64 / s.values.len() as f64;
    mu * object_similarity(&fg) + (1.0 - mu) * object_similarity(&bg)
}

/// Structural similarity without stabilizing constants.
fn region_ssim(pred: &[f64], gt: &[f64]) -> f64 {
    let n = pred.len();
    let mx = pred.iter().sum::<f64>() / n as f64;
    let my = gt.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in pred.iter().zip(gt) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let dof = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let (sxx, syy, sxy) = (sxx / dof, syy / dof, sxy / dof);
    let num = 4.0 * mx * my * sxy;
    let den = (mx * mx + my * my) * (sxx + syy);
    if num != 0.0 {
        num / den
    } else if den == 0.0 {
        // Both regions flat (or both black): structurally identical.
        1.0
    } else {
        0.0
    }
}

/// Split point (count of leading columns, count of leading rows) at the
/// foreground centroid, using 1-based coordinates rounded half away from zero.
fn centroid_split(g: &GroundTruth) -> (usize, usize) {
    let w = g.width as usize;
    let h = g.height as usize;
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (i, &gv) in g.values.iter().enumerate() {
        if gv {
            sx += (i % w + 1) as f64;
            sy += (i / w + 1) as f64;
            n += 1;
        }
    }
    if n == 0 {
        return (((w as f64) / 2.0).round() as usize, ((h as f64) / 2.0).round() as usize);
    }
    let x = (sx / n as f64).round() as usize;
    let y = (sy / n as f64).round() as usize;
    (x.min(w), y.min(h))
}

fn s_region(s: &SaliencyMap, g: &GroundTruth) -> f64 {
    let w = s.width as usize;
    let h = s.height as usize;
    let (sx, sy) = centroid_split(g);
    let total = (w * h) as f64;
    let quadrants = [(0, sx, 0, sy), (sx, w, 0, sy), (0, sx, sy, h), (sx, w, sy, h)];
    quadrants
        .iter()
        .filter(|&&(x0, x1, y0, y1)| x1 > x0 && y1 > y0)
        .map(|&(x0, x1, y0, y1)| {
            let mut pred = Vec::with_capacity((x1 - x0) * (y1 - y0));
            let mut gt = Vec::with_capacity(pred.capacity());
            for y in y0..y1 {
                for x in x0..x1 {
                    pred.push(s.values[y * w + x]);
                    gt.push(if g.values[y * w + x] { 1.0 } else { 0.0 });
                }
            }
            let weight = pred.len() as f64 / total;
            weight * region_ssim(&pred, &gt)
        })
        .sum()
}

pub fn s_measure(s: &SaliencyMap, g: &GroundTruth) -> Result<f64, MetricError> {
    check_dims(s, g)?;
    let n = s.values.len();
    if n == 0 {
        return Ok(1.0);
    }
    let mean_s = s.values.iter().sum::<f64>() / n as f64;
    let fg = g.foreground();
    let q = if fg == 0 {
        1.0 - mean_s
    } else if fg == n {
        mean_s
    } else {
        S_ALPHA * s_object(s, g) + (1.0 - S_ALPHA) * s_region(s, g)
    };
    Ok(q.clamp(0.0, 1.0))
}

/// Every per-frame quantity needed for dataset aggregation.
#[derive(Debug, Clone)]
pub struct FrameScores {
    pub mae: f64,
    pub s_m: f64,
    pub f_curve: Vec<f64>,
    pub e_curve: Vec<f64>,
}

pub fn score_frame(s: &SaliencyMap, g: &GroundTruth) -> Result<FrameScores, MetricError> {
    Ok(FrameScores {
        mae: mae(s, g)?,
        s_m: s_measure(s, g)?,
        f_curve: f_curve(s, g)?,
        e_curve: e_curve(s, g)?,
    })
}

/// Averages per-frame scores: means for MAE and S, per-threshold means then
/// max for F and E.
pub fn aggregate(frames: &[FrameScores]) -> Result<MetricReport, MetricError> {
    if frames.is_empty() {
        return Err(MetricError::NoFrames);
    }
    let n = frames.len() as f64;
    let mean_curve = |pick: fn(&FrameScores) -> &Vec<f64>| -> f64 {
        (0..THRESHOLDS)
            .map(|k| frames.iter().map(|f| pick(f)[k]).sum::<f64>() / n)
            .fold(0.0, f64::max)
    };
    Ok(MetricReport {
        mae: frames.iter().map(|f| f.mae).sum::<f64>() / n,
        max_f: mean_curve(|f| &f.f_curve),
        max_e: mean_curve(|f| &f.e_curve),
        s_m: frames.iter().map(|f| f.s_m).sum::<f64>() / n,
        frame_count: frames.len(),
    })
}

/// Evaluates named (prediction, ground truth) pairs in parallel.
pub fn evaluate_pairs(
    pairs: &[(String, SaliencyMap, GroundTruth)],
) -> Result<MetricReport, MetricError> {
    let scores: Vec<FrameScores> = pairs
        .par_iter()
        .map(|(name, s, g)| {
            score_frame(s, g).map_err(|e| MetricError::Frame {
                frame: name.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    aggregate(&scores)
}

fn png_names(dir: &Path) -> Result<BTreeSet<String>, MetricError> {
    let io = |e: std::io::Error| MetricError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    };
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") && entry.path().is_file() {
            names.insert(name);
        }
    }
    Ok(names)
}

fn load_gray(path: &Path) -> Result<(u32, u32, Vec<u8>), MetricError> {
    let img = image::open(path).map_err(|e| MetricError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    Ok((w, h, gray.into_raw()))
}

/// Scores a directory of predicted maps against a directory of ground truth
/// masks, pairing files by identical names in lexicographic order.
pub fn evaluate_sequence(pred_dir: &Path, gt_dir: &Path) -> Result<MetricReport, MetricError> {
    let pred = png_names(pred_dir)?;
    let gt = png_names(gt_dir)?;
    if pred != gt {
        return Err(MetricError::FileSets {
            only_pred: pred.difference(&gt).cloned().collect(),
            only_gt: gt.difference(&pred).cloned().collect(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::NoFrames);
    }
    let names: Vec<String> = pred.into_iter().collect();
    let pairs: Vec<(String, SaliencyMap, GroundTruth)> = names
        .par_iter()
        .map(|name| {
            let frame_err = |e: MetricError| MetricError::Frame {
                frame: name.clone(),
                source: Box::new(e),
            };
            let (sw, sh, sb) = load_gray(&pred_dir.join(name))?;
            let (gw, gh, gb) = load_gray(&gt_dir.join(name))?;
            if (sw, sh) != (gw, gh) {
                return Err(frame_err(MetricError::DimMismatch(sw, sh, gw, gh)));
            }
            let s = SaliencyMap::from_gray8(sw, sh, &sb).map_err(frame_err)?;
            let g = GroundTruth::from_gray8(gw, gh, &gb).map_err(frame_err)?;
            Ok((name.clone(), s, g))
        })
        .collect::<Result<_, MetricError>>()?;
    evaluate_pairs(&pairs)
}
