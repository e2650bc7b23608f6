use std::fmt::Write as _;

use crate::annotation::SceneDescription;
use crate::model::{AspectRatio, EffectIn, EffectTrans, MAX_LAYOUT};

use super::Instruction;

/// Placed in the prompt when the user gave no instruction.
pub const NO_PREFERENCE: &str = "no specific user preference";

/// A scene keyframe attached to multimodal requests, PNG encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyframe {
    pub scene_index: usize,
    pub png: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub images: Vec<Keyframe>,
}

fn vocabulary<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Renders the planning prompt. Identical inputs give identical text.
pub fn build_prompt(
    instr: &Instruction,
    descriptions: &[SceneDescription],
    aspect: AspectRatio,
) -> Prompt {
    let mut t = String::new();
    t.push_str(
        "You are a video reframing planner. A landscape video has been split into scenes \
         and every object in each scene has been grounded with a caption and a bounding box \
         [x1,y1,x2,y2] in source pixels. Decide, scene by scene, which objects the reframed \
         video should show and which effects to apply.\n\n",
    );
    let instruction = if instr.is_empty() {
        NO_PREFERENCE
    } else {
        instr.as_str()
    };
    writeln!(t, "User instruction: {instruction}").unwrap();
    writeln!(t, "Target aspect ratio: {aspect}\n").unwrap();

    t.push_str("Plan each scene in four steps:\n");
    writeln!(
        t,
        "1. Aspect ratio: use {aspect} unless the instruction asks for a different W:H."
    )
    .unwrap();
    t.push_str(
        "2. Importance: rank the objects by how much they matter to the instruction and to \
         the scene; prefer large, central, story-relevant subjects.\n",
    );
    writeln!(
        t,
        "3. Layout: the layout is the number of subjects shown at once, stacked as \
         full-width bands from top to bottom in the order listed (1 to {MAX_LAYOUT}). Use 2 \
         or 3 only when that many subjects matter at the same time, such as a dialogue."
    )
    .unwrap();
    writeln!(
        t,
        "4. Effects: effect_in is one of {} and applies within the scene; effect_trans is \
         one of {} and applies at the scene boundary. Use effects sparingly.\n",
        vocabulary(&EffectIn::ALL),
        vocabulary(&EffectTrans::ALL)
    )
    .unwrap();

    t.push_str("Scenes:\n");
    for d in descriptions {
        if d.text.is_empty() {
            writeln!(t, "Scene-{}: (no objects)", d.scene_index).unwrap();
        } else {
            writeln!(t, "{}", d.text).unwrap();
        }
    }
    t.push('\n');

    t.push_str("Answer with exactly one line per scene using this grammar and nothing else:\n");
    writeln!(
        t,
        "Scene-<k>: layout=<n>; objects=[<id>,...]; effect_in=<{}>; effect_trans=<{}>; aspect=<W:H>",
        EffectIn::ALL.map(|e| e.as_str()).join("|"),
        EffectTrans::ALL.map(|e| e.as_str()).join("|"),
    )
    .unwrap();
    t.push_str("where <k> is the scene number, <n> equals the number of listed object ids, ");
    t.push_str("and ids are Object numbers from that scene.\n");
    let indices: Vec<String> = descriptions
        .iter()
        .map(|d| d.scene_index.to_string())
        .collect();
    writeln!(t, "Scenes to plan: {}", indices.join(", ")).unwrap();

    Prompt {
        text: t,
        images: Vec::new(),
    }
}
