//! Content-aware video reframing.
//!
//! The pipeline runs in three stages that hand off plain data:
//!
//! 1. **Perception**: [`scene`] splits a [`FrameSequence`] into shots, and
//!    grounded objects arrive as an [`AnnotationFile`](annotation::AnnotationFile)
//!    produced by an external exporter.
//! 2. **Planning**: [`planner`] turns a user instruction plus scene
//!    descriptions into a [`Blueprint`], either through a chat-completion
//!    model or a deterministic heuristic.
//! 3. **Execution**: [`render`] realizes each [`ScenePlan`] as crop, zoom and
//!    fade timelines and resamples the output frames.
//!
//! [`metrics`] implements the saliency measures (MAE, max-F, max-E, S) used
//! to score object selection against ground-truth masks.

pub mod annotation;
pub mod frames;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod render;
pub mod rle;
pub mod scene;
pub mod synth;

pub use model::{
    validate_blueprint, AspectRatio, BBox, BinaryGrid, Blueprint, EffectIn, EffectTrans,
    FrameSequence, Mask, MetricReport, ModelError, ObjectRecord, Scene, SceneAnnotation,
    SceneDetectConfig, ScenePlan, Violation,
};
