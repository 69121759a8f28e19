//! Episode records, the `RGDS1` binary dataset format and parallel generation.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! header    magic "RGDS1\0\0\0" | version u32 | width u32 | height u32
//!           | episodes u64 | steps u64 | config_hash u64
//! index     episodes x u64 byte offset of each episode block
//! episode   scene_seed u64 | attempt u64 | success u8 | steps u32
//!           | final_cube 3xf64 | basket position 3xf64 | half_extents 2xf64
//!           | depth f64 | wall f64 | basket color 3xf64
//!           then per step: stage u8 | action u8 | joints 6xf64 | velocities 6xf64
//!           | cube 3xf64 | gripper 3xf64 | rgb width*height*3 bytes
//! trailer   crc32 of every preceding byte, u32
//! ```

mod format;
mod generate;
mod stats;

pub use format::{read_dataset, write_dataset, DatasetReader, DatasetWriter, DATASET_MAGIC, DATASET_VERSION};
pub use generate::{generate, generate_with, record_episode, GenerateOptions, STALL_WINDOW};
pub use stats::{dataset_stats, stats_of, DatasetStats, Moments};

use serde::{Deserialize, Serialize};

use crate::control::{GripperAction, StageId};
use crate::mathkin::{Joints, Vec3};
use crate::render::Image;
use crate::scene::Basket;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("generation stalled: {successes} successes in the last {window} attempts (after {attempts} attempts)")]
    GenerationStalled {
        attempts: u64,
        successes: usize,
        window: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub image: Image,
    pub joint_angles: Joints,
    pub motor_velocities: Joints,
    pub gripper_action: GripperAction,
    pub cube_position: Vec3,
    pub gripper_position: Vec3,
    pub stage_id: StageId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
    pub scene_seed: u64,
    /// Generation attempt index the episode came from.
    pub attempt: u64,
    pub success: bool,
    pub final_cube_position: Vec3,
    pub basket: Basket,
}

impl EpisodeRecord {
    /// Replays the basket-containment predicate on the stored final cube position.
    pub fn contained(&self) -> bool {
        self.basket.contains(&self.final_cube_position)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvariantViolation(m));
        if !self.success {
            return bad(format!("episode {} was not successful", self.attempt));
        }
        if self.steps.is_empty() {
            return bad(format!("episode {} has no steps", self.attempt));
        }
        for (k, s) in self.steps.iter().enumerate() {
            let finite = s.joint_angles.iter().chain(&s.motor_velocities).all(|v| v.is_finite())
                && s.cube_position.iter().chain(s.gripper_position.iter()).all(|v| v.is_finite());
            if !finite {
                return bad(format!("episode {} step {k} has non-finite values", self.attempt));
            }
            if k > 0 && s.stage_id < self.steps[k - 1].stage_id {
                return bad(format!("episode {} stage ids decrease at step {k}", self.attempt));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub width: u32,
    pub height: u32,
    pub episodes: u64,
    pub steps: u64,
    pub config_hash: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub episodes: u64,
    pub steps: u64,
}

/// A dataset loaded into memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub episodes: Vec<EpisodeRecord>,
}

impl Dataset {
    pub fn steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps.len()).sum()
    }

    /// Leading episodes whose cumulative length first reaches `frames`
    /// (all episodes if the dataset is smaller).
    pub fn prefix_frames(&self, frames: usize) -> Dataset {
        let mut total = 0;
        let mut episodes = Vec::new();
        for e in &self.episodes {
            if total >= frames {
                break;
            }
            total += e.steps.len();
            episodes.push(e.clone());
        }
        Dataset {
            header: DatasetHeader {
                episodes: episodes.len() as u64,
                steps: total as u64,
                ..self.header
            },
            episodes,
        }
    }
}
