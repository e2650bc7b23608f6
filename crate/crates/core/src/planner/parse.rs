//! Extraction of plan lines from free-form model output.
//!
//! A plan line looks like
//!
//! ```text
//! Scene-1: layout=2; objects=[1,3]; effect_in=zoom_in; effect_trans=fade_out; aspect=9:16
//! ```
//!
//! Matching is case-insensitive and tolerant of whitespace, markdown
//! emphasis and surrounding prose. Lines that mention a scene but do not
//! start their body with `layout=` are treated as prose. Every problem found
//! is reported, not just the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::model::{AspectRatio, Blueprint, EffectIn, EffectTrans, Scene, ScenePlan, MAX_LAYOUT};

use super::PlanText;

static HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)scene[\s_-]*(\d+)[\s*_`]*:").unwrap());
static BODY_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^[\s*_`]*layout\s*=").unwrap());
static FIELD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)^([a-z_]+)\s*=\s*(.*?)$").unwrap());
static INT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+$").unwrap());
static ID_LIST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\[\s*(\d+(?:\s*,\s*\d+)*)?\s*,?\s*\]$").unwrap());
static ASPECT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d+)\s*:\s*(\d+)$").unwrap());

const FIELDS: [&str; 5] = ["layout", "objects", "effect_in", "effect_trans", "aspect"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line number in the plan text, when the problem has one.
    pub line: Option<usize>,
    pub scene: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("could not parse plan: {}", .diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct PlanParseError {
    pub diagnostics: Vec<Diagnostic>,
}

/// Formats a plan in the grammar [`parse_plan_text`] accepts.
pub fn render_plan_line(plan: &ScenePlan) -> String {
    let ids: Vec<String> = plan.object_ids.iter().map(u32::to_string).collect();
    format!(
        "Scene-{}: layout={}; objects=[{}]; effect_in={}; effect_trans={}; aspect={}",
        plan.scene_index,
        plan.layout,
        ids.join(","),
        plan.effect_in,
        plan.effect_trans,
        plan.aspect
    )
}

fn clean_value(v: &str) -> &str {
    v.trim()
        .trim_end_matches(|c: char| c == '.' || c == ',' || c.is_whitespace())
        .trim_matches(|c: char| matches!(c, '*' | '`' | '"' | '\''))
        .trim()
}

/// Parses the body of one plan line (everything after `Scene-<k>:`).
fn parse_body(body: &str, scene: usize) -> Result<ScenePlan, Vec<String>> {
    let mut errors = Vec::new();
    let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
    let body = body.trim().trim_matches(|c: char| c == '*' || c == '`').trim();
    for part in body.split(';') {
        let part = clean_value(part);
        if part.is_empty() {
            continue;
        }
        let Some(caps) = FIELD.captures(part) else {
            errors.push(format!("malformed field {part:?}, scene {scene}"));
            continue;
        };
        let key = caps[1].to_ascii_lowercase();
        let value = clean_value(&caps[2]).to_string();
        match FIELDS.iter().find(|&&f| f == key) {
            Some(&field) => {
                if values.insert(field, value).is_some() {
                    errors.push(format!("field {field} given twice, scene {scene}"));
                }
            }
            None => errors.push(format!("unknown field {key:?}, scene {scene}")),
        }
    }
    for field in FIELDS {
        if !values.contains_key(field) {
            errors.push(format!("missing field {field}, scene {scene}"));
        }
    }
    let get = |k: &str| values.get(k).map(String::as_str);

    let layout = get("layout").and_then(|v| {
        if INT.is_match(v) {
            v.parse::<usize>().ok()
        } else {
            errors.push(format!("malformed layout {v:?}, scene {scene}"));
            None
        }
    });
    let objects = get("objects").and_then(|v| {
        let ids = ID_LIST.captures(v).and_then(|caps| match caps.get(1) {
            Some(m) => m
                .as_str()
                .split(',')
                .map(|s| s.trim().parse::<u32>().ok())
                .collect::<Option<Vec<u32>>>(),
            None => Some(Vec::new()),
        });
        if ids.is_none() {
            errors.push(format!("malformed objects {v:?}, scene {scene}"));
        }
        ids
    });
    let effect_in = get("effect_in").and_then(|v| match v.parse::<EffectIn>() {
        Ok(e) => Some(e),
        Err(_) => {
            errors.push(format!("malformed effect_in {v:?}, scene {scene}"));
            None
        }
    });
    let effect_trans = get("effect_trans").and_then(|v| match v.parse::<EffectTrans>() {
        Ok(e) => Some(e),
        Err(_) => {
            errors.push(format!("malformed effect_trans {v:?}, scene {scene}"));
            None
        }
    });
    let aspect = get("aspect").and_then(|v| {
        let parsed = ASPECT
            .captures(v)
            .and_then(|c| AspectRatio::new(c[1].parse().ok()?, c[2].parse().ok()?).ok());
        if parsed.is_none() {
            errors.push(format!("malformed aspect {v:?}, scene {scene}"));
        }
        parsed
    });

    if let Some(layout) = layout {
        if !(1..=MAX_LAYOUT).contains(&layout) {
            errors.push(format!(
                "layout {layout} outside 1..={MAX_LAYOUT}, scene {scene}"
            ));
        } else if let Some(ids) = &objects {
            if ids.len() != layout {
                errors.push(format!("layout/object mismatch, scene {scene}"));
            }
        }
    }
    if let Some(ids) = &objects {
        let unique: BTreeSet<&u32> = ids.iter().collect();
        if unique.len() != ids.len() {
            errors.push(format!("duplicate object id, scene {scene}"));
        }
    }

    match (layout, objects, effect_in, effect_trans, aspect) {
        (Some(layout), Some(object_ids), Some(effect_in), Some(effect_trans), Some(aspect))
            if errors.is_empty() =>
        {
            Ok(ScenePlan {
                scene_index: scene,
                layout,
                object_ids,
                effect_in,
                effect_trans,
                aspect,
            })
        }
        _ => Err(errors),
    }
}

/// Extracts one plan per scene from model output.
///
/// Fails when any scene has no plan line, when a plan line is malformed, or
/// when two lines for the same scene disagree.
pub fn parse_plan_text(
    pt: &PlanText,
    scenes: &[Scene],
    video_id: &str,
) -> Result<Blueprint, PlanParseError> {
    let known: BTreeSet<usize> = scenes.iter().map(|s| s.index).collect();
    let mut diagnostics = Vec::new();
    let mut plans: BTreeMap<usize, (usize, ScenePlan)> = BTreeMap::new();
    let mut failed: BTreeSet<usize> = BTreeSet::new();

    for (n, line) in pt.as_str().lines().enumerate() {
        let line_no = n + 1;
        let Some((caps, body)) = HEADER
            .captures_iter(line)
            .map(|c| {
                let end = c.get(0).unwrap().end();
                (c, &line[end..])
            })
            .find(|(_, body)| BODY_START.is_match(body))
        else {
            continue;
        };
        let Ok(scene) = caps[1].parse::<usize>() else {
            diagnostics.push(Diagnostic {
                line: Some(line_no),
                scene: None,
                message: format!("scene number {:?} out of range", &caps[1]),
            });
            continue;
        };
        if !known.contains(&scene) {
            diagnostics.push(Diagnostic {
                line: Some(line_no),
                scene: Some(scene),
                message: format!("plan for unknown scene {scene}"),
            });
            continue;
        }
        match parse_body(body, scene) {
            Ok(plan) => match plans.get(&scene) {
                Some((_, prev)) if *prev == plan => {}
                Some((prev_line, _)) => diagnostics.push(Diagnostic {
                    line: Some(line_no),
                    scene: Some(scene),
                    message: format!(
                        "conflicting plan for scene {scene} (first given on line {prev_line})"
                    ),
                }),
                None => {
                    plans.insert(scene, (line_no, plan));
                }
            },
            Err(errors) => {
                failed.insert(scene);
                diagnostics.extend(errors.into_iter().map(|message| Diagnostic {
                    line: Some(line_no),
                    scene: Some(scene),
                    message,
                }));
            }
        }
    }

    let missing: Vec<String> = known
        .iter()
        .filter(|s| !plans.contains_key(s) && !failed.contains(s))
        .map(ToString::to_string)
        .collect();
    if !missing.is_empty() {
        diagnostics.push(Diagnostic {
            line: None,
            scene: None,
            message: format!("no plan line for scenes [{}]", missing.join(", ")),
        });
    }
    if !diagnostics.is_empty() {
        return Err(PlanParseError { diagnostics });
    }
    Ok(Blueprint {
        video_id: video_id.to_string(),
        plans: plans.into_values().map(|(_, p)| p).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scenes(n: usize) -> Vec<Scene> {
        (0..n).map(|i| Scene::new(i, i * 10, i * 10 + 10)).collect()
    }

    fn parse(text: &str, n: usize) -> Result<Blueprint, PlanParseError> {
        parse_plan_text(&PlanText(text.into()), &scenes(n), "v")
    }

    #[test]
    fn clean_line() {
        let bp = parse(
            "Scene-0: layout=1; objects=[2]; effect_in=none; effect_trans=none; aspect=9:16\n\
             Scene-1: layout=2; objects=[1,3]; effect_in=zoom_in; effect_trans=fade_out; aspect=9:16",
            2,
        )
        .unwrap();
        assert_eq!(
            bp.plans[1],
            ScenePlan {
                scene_index: 1,
                layout: 2,
                object_ids: vec![1, 3],
                effect_in: EffectIn::ZoomIn,
                effect_trans: EffectTrans::FadeOut,
                aspect: AspectRatio::new(9, 16).unwrap(),
            }
        );
    }

    #[test]
    fn prose_is_ignored() {
        let clean = "Scene-1: layout=2; objects=[1,3]; effect_in=zoom_in; effect_trans=fade_out; aspect=9:16";
        let chatty = "Sure! Here is the plan:\n\n\
            Scene-0 shows a boy; Scene-1: Object-1: a boy standing in the field at [1,2,3,4]\n\
            - **Scene 0:** layout = 1 ; objects = [ 4 ] ; effect_in=None; effect_trans=NONE; aspect=9:16\n\
            * Scene-1: layout=2; objects=[1,3]; effect_in=zoom_in; effect_trans=fade_out; aspect=9:16.\n\
            Let me know if you want changes!";
        let a = parse(&format!("Scene-0: layout=1; objects=[4]; effect_in=none; effect_trans=none; aspect=9:16\n{clean}"), 2).unwrap();
        let b = parse(chatty, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn layout_object_mismatch() {
        let err = parse(
            "Scene-1: layout=2; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16",
            2,
        )
        .unwrap_err();
        let messages: Vec<&str> = err.diagnostics.iter().map(|d| d.message.as_str()).collect();
        assert!(messages.contains(&"layout/object mismatch, scene 1"), "{messages:?}");
        assert!(err.to_string().contains("no plan line for scenes [0]"));
    }

    #[test]
    fn missing_scenes_are_listed() {
        let err = parse(
            "Scene-1: layout=1; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16",
            4,
        )
        .unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        assert_eq!(err.diagnostics[0].message, "no plan line for scenes [0, 2, 3]");
    }

    #[test]
    fn malformed_fields_are_all_reported() {
        let err = parse(
            "Scene-0: layout=two; objects=1,2; effect_in=spin; effect_trans=none",
            1,
        )
        .unwrap_err();
        let text = err.to_string();
        for needle in ["malformed layout", "malformed objects", "malformed effect_in", "missing field aspect"] {
            assert!(text.contains(needle), "{needle} not in {text}");
        }
        assert!(err.diagnostics.iter().all(|d| d.line == Some(1)));
    }

    #[test]
    fn conflicting_duplicates() {
        let err = parse(
            "Scene-0: layout=1; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16\n\
             Scene-0: layout=1; objects=[2]; effect_in=none; effect_trans=none; aspect=9:16",
            1,
        )
        .unwrap_err();
        assert!(err.diagnostics[0].message.starts_with("conflicting plan for scene 0"));
        assert!(parse(
            "Scene-0: layout=1; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16\n\
             scene-0 : LAYOUT=1; OBJECTS=[1]; effect_in=none; effect_trans=none; aspect=9:16",
            1,
        )
        .is_ok());
    }

    #[test]
    fn unknown_scene_and_layout_cap() {
        let err = parse(
            "Scene-0: layout=4; objects=[1,2,3,4]; effect_in=none; effect_trans=none; aspect=9:16\n\
             Scene-7: layout=1; objects=[1]; effect_in=none; effect_trans=none; aspect=9:16",
            1,
        )
        .unwrap_err();
        let text = err.to_string();
        assert!(text.contains("layout 4 outside 1..=3"), "{text}");
        assert!(text.contains("plan for unknown scene 7"), "{text}");
    }

    fn plan_strategy() -> impl Strategy<Value = ScenePlan> {
        (
            0usize..50,
            proptest::sample::subsequence((1u32..40).collect::<Vec<_>>(), 1..=3).prop_shuffle(),
            proptest::sample::select(EffectIn::ALL.to_vec()),
            proptest::sample::select(EffectTrans::ALL.to_vec()),
            1u32..40,
            1u32..40,
        )
            .prop_map(|(scene_index, object_ids, effect_in, effect_trans, w, h)| ScenePlan {
                scene_index,
                layout: object_ids.len(),
                object_ids,
                effect_in,
                effect_trans,
                aspect: AspectRatio::new(w, h).unwrap(),
            })
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(plan in plan_strategy()) {
            let scenes = vec![Scene::new(plan.scene_index, 0, 1)];
            let text = PlanText(render_plan_line(&plan));
            let bp = parse_plan_text(&text, &scenes, "v").unwrap();
            prop_assert_eq!(&bp.plans[0], &plan);
        }

        #[test]
        fn arbitrary_text_never_panics(text in "\\PC{0,300}") {
            let _ = parse(&text, 2);
        }
    }
}
