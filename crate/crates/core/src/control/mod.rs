//! Joint velocity control and the scripted five-stage pick-and-drop demonstrator.

mod episode;
mod pid;
mod plan;
mod world;

pub use episode::{
    execute_episode, run_scripted, EpisodeOutcome, EpisodeRecorder, Frame, NullRecorder, MAX_JOINT_STEP,
};
pub use pid::{pid_step, Motor, PidGains, PidState};
pub use plan::{plan_episode, GripperAction, ScriptParams, StageId, StagePlan};
pub use world::{Actuator, Aperture, GripperState, World, CUBE_ID};

use crate::mathkin::KinematicsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("planning failed during {stage:?}: {source}")]
    PlanningFailed {
        stage: StageId,
        #[source]
        source: KinematicsError,
    },
    #[error("joint step of {delta:.3} rad at step {step} of {stage:?}")]
    JointJump { stage: StageId, step: usize, delta: f64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
