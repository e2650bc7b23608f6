//! Planning: from a user instruction and grounded scenes to a [`Blueprint`].
//!
//! Two routes produce the same artifact. The model route renders a prompt,
//! asks a chat-completion endpoint (or a replay store) for plan text and
//! extracts one plan line per scene with [`parse_plan_text`]. The heuristic
//! route scores objects directly and needs no network.
//!
//! Both routes finish with [`validate_blueprint`], so a returned blueprint
//! is always renderable against its annotations.

mod client;
mod heuristic;
mod parse;
mod prompt;

pub use client::{
    complete, prompt_hash, ChatClient, Completer, CompletionError, PlannerConfig, PlannerMode,
    ReplayStore,
    API_KEY_ENV, ENDPOINT_ENV,
};
pub use heuristic::{heuristic_plan, object_scores, select_salient, tokens, ObjectScore, TIE_WINDOW};
pub use parse::{parse_plan_text, render_plan_line, Diagnostic, PlanParseError};
pub use prompt::{build_prompt, Keyframe, Prompt, NO_PREFERENCE};

use thiserror::Error;

use crate::annotation::{describe_scene, AnnotationFile};
use crate::model::{validate_blueprint, AspectRatio, Blueprint, Violation};

pub const MAX_INSTRUCTION_CHARS: usize = 4096;

/// Free-form user request; empty means no preference.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Instruction(String);

impl Instruction {
    pub fn new(text: impl Into<String>) -> Result<Self, PlanError> {
        let text = text.into();
        let chars = text.chars().count();
        if chars > MAX_INSTRUCTION_CHARS {
            return Err(PlanError::InstructionTooLong(chars));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.trim().is_empty()
    }
}

/// Untrusted text returned by a language model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanText(pub String);

impl PlanText {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("instruction has {0} characters, limit is {MAX_INSTRUCTION_CHARS}")]
    InstructionTooLong(usize),
    #[error("scene {0} has no objects to plan around")]
    EmptyScene(usize),
    #[error("nothing to plan: the annotation file has no scenes")]
    NoScenes,
    #[error(transparent)]
    Parse(#[from] PlanParseError),
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error("planned blueprint is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

fn check_valid(bp: Blueprint, file: &AnnotationFile) -> Result<Blueprint, PlanError> {
    let violations = validate_blueprint(&bp, &file.scenes, &file.scene_list());
    if violations.is_empty() {
        Ok(bp)
    } else {
        Err(PlanError::Invalid(violations))
    }
}

/// Plans a whole video with one model request.
///
/// `keyframes` are attached only when non-empty; pass none for the
/// text-only configuration.
pub fn plan_with_model(
    completer: &dyn Completer,
    instr: &Instruction,
    file: &AnnotationFile,
    aspect: AspectRatio,
    keyframes: Vec<Keyframe>,
) -> Result<Blueprint, PlanError> {
    if file.scenes.is_empty() {
        return Err(PlanError::NoScenes);
    }
    let descriptions: Vec<_> = file.scenes.iter().map(describe_scene).collect();
    let mut prompt = build_prompt(instr, &descriptions, aspect);
    prompt.images = keyframes;
    let text = completer.complete(&prompt)?;
    let bp = parse_plan_text(&text, &file.scene_list(), &file.video_id)?;
    check_valid(bp, file)
}
