//! Model-free planning.
//!
//! Each object scores `relevance + saliency`:
//!
//! * relevance is the share of instruction tokens that also occur in the
//!   caption (0 for an empty instruction);
//! * saliency is the box's share of the frame area, discounted linearly by
//!   the distance of its center from the frame center (1 at the center, 0 at
//!   a corner).
//!
//! The best object is shown alone unless the runner-up scores within
//! [`TIE_WINDOW`] of it, in which case both are stacked.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::annotation::AnnotationFile;
use crate::model::{AspectRatio, BBox, Blueprint, EffectIn, EffectTrans, SceneAnnotation, ScenePlan};

use super::{check_valid, Instruction, PlanError};

/// Relative score gap under which the top two objects share the frame.
pub const TIE_WINDOW: f64 = 0.15;

/// Lowercased alphanumeric tokens.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectScore {
    pub id: u32,
    pub relevance: f64,
    pub saliency: f64,
}

impl ObjectScore {
    pub fn total(&self) -> f64 {
        self.relevance + self.saliency
    }
}

fn saliency(bbox: &BBox, width: u32, height: u32) -> f64 {
    let (w, h) = (f64::from(width), f64::from(height));
    let norm_area = bbox.area() / (w * h);
    let (cx, cy) = bbox.center();
    let d_center = (cx - w / 2.0).hypot(cy - h / 2.0);
    let d_max = (w / 2.0).hypot(h / 2.0);
    norm_area * (1.0 - d_center / d_max)
}

/// Scores for every object of a scene, best first (ties by ascending id).
pub fn object_scores(
    sa: &SceneAnnotation,
    instr: &Instruction,
    width: u32,
    height: u32,
) -> Vec<ObjectScore> {
    let wanted = tokens(instr.as_str());
    let mut scores: Vec<ObjectScore> = sa
        .objects
        .iter()
        .map(|o| {
            let relevance = if wanted.is_empty() {
                0.0
            } else {
                let caption = tokens(&o.caption);
                wanted.intersection(&caption).count() as f64 / wanted.len() as f64
            };
            ObjectScore {
                id: o.id,
                relevance,
                saliency: saliency(&o.bbox, width, height),
            }
        })
        .collect();
    scores.sort_by(|a, b| {
        b.total()
            .partial_cmp(&a.total())
            .unwrap_or(Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    scores
}

/// Object ids the heuristic would show for one scene, top band first.
pub fn select_salient(
    sa: &SceneAnnotation,
    instr: &Instruction,
    width: u32,
    height: u32,
) -> Result<Vec<u32>, PlanError> {
    let scores = object_scores(sa, instr, width, height);
    let Some(best) = scores.first() else {
        return Err(PlanError::EmptyScene(sa.scene_index));
    };
    let mut ids = vec![best.id];
    if let Some(second) = scores.get(1) {
        if best.total() - second.total() <= TIE_WINDOW * best.total() {
            ids.push(second.id);
        }
    }
    Ok(ids)
}

pub fn heuristic_plan(
    instr: &Instruction,
    file: &AnnotationFile,
    aspect: AspectRatio,
) -> Result<Blueprint, PlanError> {
    if file.scenes.is_empty() {
        return Err(PlanError::NoScenes);
    }
    let last = file.scenes.len() - 1;
    let plans = file
        .scenes
        .iter()
        .enumerate()
        .map(|(i, sa)| {
            let object_ids = select_salient(sa, instr, file.width, file.height)?;
            Ok(ScenePlan {
                scene_index: sa.scene_index,
                layout: object_ids.len(),
                object_ids,
                effect_in: EffectIn::None,
                effect_trans: if i == last {
                    EffectTrans::None
                } else {
                    EffectTrans::FadeOut
                },
                aspect,
            })
        })
        .collect::<Result<Vec<_>, PlanError>>()?;
    check_valid(
        Blueprint {
            video_id: file.video_id.clone(),
            plans,
        },
        file,
    )
}
