//! JSON documents exchanged between pipeline stages, and the textual scene
//! descriptions handed to the planner.
//!
//! Every document is written in one canonical form: object keys sorted,
//! two-space indentation, scalar arrays kept on one line and floats printed
//! with exactly four decimals (rounded half up). Writing the same value twice
//! therefore gives identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{BBox, Blueprint, Mask, ObjectRecord, Scene, SceneAnnotation};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl AnnotationError {
    pub fn path(&self) -> &str {
        match self {
            AnnotationError::Schema { path, .. } | AnnotationError::Invalid { path, .. } => path,
        }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        AnnotationError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Grounded objects for every scene of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFile {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub scenes: Vec<SceneAnnotation>,
}

impl AnnotationFile {
    pub fn scene_list(&self) -> Vec<Scene> {
        self.scenes.iter().map(SceneAnnotation::scene).collect()
    }

    pub fn object_count(&self) -> usize {
        self.scenes.iter().map(|s| s.objects.len()).sum()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDoc {
    video_id: String,
    width: u32,
    height: u32,
    fps: f64,
    scenes: Vec<SceneDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    scene_index: usize,
    start: usize,
    end: usize,
    keyframe: usize,
    objects: Vec<ObjectDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: u32,
    caption: String,
    bbox: [f64; 4],
    mask_rle: Vec<u32>,
}

fn parse_doc<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, AnnotationError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let mut path = e.path().to_string();
        let message = e.into_inner().to_string();
        // serde reports a missing field at its parent; point at the field.
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path = if path == "." { field.into() } else { format!("{path}.{field}") };
        }
        AnnotationError::Schema {
            path: if path == "." { "$".into() } else { path },
            message,
        }
    })?;
    de.end().map_err(|e| AnnotationError::Schema {
        path: "$".into(),
        message: e.to_string(),
    })?;
    Ok(value)
}

pub fn load_annotations(bytes: &[u8]) -> Result<AnnotationFile, AnnotationError> {
    let doc: AnnotationDoc = parse_doc(bytes)?;
    if doc.width == 0 || doc.height == 0 {
        return Err(AnnotationError::invalid("width", "frame dimensions must be positive"));
    }
    if !(doc.fps.is_finite() && doc.fps > 0.0) {
        return Err(AnnotationError::invalid("fps", "fps must be positive"));
    }
    let (width, height) = (doc.width, doc.height);
    let mut cursor = 0usize;
    let mut scenes = Vec::with_capacity(doc.scenes.len());
    for (si, s) in doc.scenes.into_iter().enumerate() {
        let at = |field: &str| format!("scenes[{si}].{field}");
        if s.scene_index != si {
            return Err(AnnotationError::invalid(
                at("scene_index"),
                format!("expected {si}, got {}", s.scene_index),
            ));
        }
        if s.start != cursor || s.start >= s.end {
            return Err(AnnotationError::invalid(
                at("start"),
                format!(
                    "scene {}..{} does not continue the partition at {cursor}",
                    s.start, s.end
                ),
            ));
        }
        cursor = s.end;
        if !(s.start <= s.keyframe && s.keyframe < s.end) {
            return Err(AnnotationError::invalid(
                at("keyframe"),
                format!("keyframe {} outside {}..{}", s.keyframe, s.start, s.end),
            ));
        }
        let mut ids = BTreeSet::new();
        let mut objects = Vec::with_capacity(s.objects.len());
        for (oi, o) in s.objects.into_iter().enumerate() {
            let at = |field: &str| format!("scenes[{si}].objects[{oi}].{field}");
            if !ids.insert(o.id) {
                return Err(AnnotationError::invalid(
                    at("id"),
                    format!("duplicate object id {}", o.id),
                ));
            }
            let mask = Mask::new(width, height, o.mask_rle).map_err(|e| {
                AnnotationError::invalid(at("mask"), format!("mask does not match {width}x{height} header: {e}"))
            })?;
            let record = ObjectRecord {
                id: o.id,
                caption: o.caption,
                bbox: BBox::from(o.bbox),
                mask,
            };
            record
                .bbox
                .validate(width, height)
                .map_err(|e| AnnotationError::invalid(at("bbox"), e.to_string()))?;
            record
                .validate(width, height)
                .map_err(|e| AnnotationError::invalid(at("bbox"), e.to_string()))?;
            objects.push(record);
        }
        scenes.push(SceneAnnotation {
            scene_index: s.scene_index,
            start: s.start,
            end: s.end,
            keyframe: s.keyframe,
            objects,
        });
    }
    Ok(AnnotationFile {
        video_id: doc.video_id,
        width,
        height,
        fps: doc.fps,
        scenes,
    })
}

pub fn save_annotations(file: &AnnotationFile) -> Vec<u8> {
    let doc = AnnotationDoc {
        video_id: file.video_id.clone(),
        width: file.width,
        height: file.height,
        fps: file.fps,
        scenes: file
            .scenes
            .iter()
            .map(|s| SceneDoc {
                scene_index: s.scene_index,
                start: s.start,
                end: s.end,
                keyframe: s.keyframe,
                objects: s
                    .objects
                    .iter()
                    .map(|o| ObjectDoc {
                        id: o.id,
                        caption: o.caption.clone(),
                        bbox: o.bbox.into(),
                        mask_rle: o.mask.runs().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
    };
    to_canonical_json(&doc)
}

pub fn load_blueprint(bytes: &[u8]) -> Result<Blueprint, AnnotationError> {
    parse_doc(bytes)
}

pub fn save_blueprint(bp: &Blueprint) -> Vec<u8> {
    to_canonical_json(bp)
}

/// Output of shot detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenesFile {
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub scenes: Vec<Scene>,
}

pub fn load_scenes(bytes: &[u8]) -> Result<ScenesFile, AnnotationError> {
    let file: ScenesFile = parse_doc(bytes)?;
    crate::model::check_partition(&file.scenes, file.frame_count)
        .map_err(|e| AnnotationError::invalid("scenes", e.to_string()))?;
    Ok(file)
}

pub fn save_scenes(file: &ScenesFile) -> Vec<u8> {
    to_canonical_json(file)
}

/// Serializes any value in the canonical layout described above.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("document types serialize to JSON");
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    out.into_bytes()
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&round_half_up(n.as_f64().unwrap_or(0.0), 4));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            let scalar = items.iter().all(|v| !v.is_array() && !v.is_object());
            if items.is_empty() {
                out.push_str("[]");
            } else if scalar {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, v, depth + 1);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, v) in items.iter().enumerate() {
                    indent(out, depth + 1);
                    write_value(out, v, depth + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                indent(out, depth);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[k.as_str()], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Formats `v` with `decimals` fractional digits, rounding half up on its
/// shortest decimal representation (so `0.125` at two places is `0.13`).
pub fn round_half_up(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return "0".to_string();
    }
    let negative = v < 0.0;
    let repr = format!("{}", v.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let mut frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    let round_up = frac.len() > decimals && frac[decimals] >= 5;
    frac.resize(decimals, 0);
    digits.extend(frac);
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let int_len = digits.len() - decimals;
    let mut s = String::with_capacity(digits.len() + 2);
    let is_zero = digits.iter().all(|&d| d == 0);
    if negative && !is_zero {
        s.push('-');
    }
    for (i, d) in digits.iter().enumerate() {
        if i == int_len {
            s.push('.');
        }
        s.push((b'0' + d) as char);
    }
    s
}

/// Textual rendering of one scene's objects, one line per object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneDescription {
    pub scene_index: usize,
    pub text: String,
}

pub fn describe_scene(sa: &SceneAnnotation) -> SceneDescription {
    let mut objects: Vec<&ObjectRecord> = sa.objects.iter().collect();
    objects.sort_by_key(|o| o.id);
    let lines: Vec<String> = objects
        .iter()
        .map(|o| {
            let b: [f64; 4] = o.bbox.into();
            let coords: Vec<String> = b.iter().map(|&v| round_half_up(v, 0)).collect();
            format!(
                "Scene-{}: Object-{}: {} at [{}]",
                sa.scene_index,
                o.id,
                o.caption.trim(),
                coords.join(",")
            )
        })
        .collect();
    SceneDescription {
        scene_index: sa.scene_index,
        text: lines.join("\n"),
    }
}
