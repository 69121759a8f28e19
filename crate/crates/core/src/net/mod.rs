//! Convolutional-recurrent controller built from scratch: layers, loss,
//! analytic gradients, Adam, training over episode streams and checkpoints.
//!
//! Training runs truncated backpropagation through time over whole episodes.
//! Each episode is prefixed with `window - 1` copies of its first frame that
//! carry no loss, which is exactly how a deployed controller pads its first
//! window. Deployment therefore sees the same recurrent state as training.

mod adam;
mod checkpoint;
mod config;
mod deploy;
mod loss;
mod model;
mod ops;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{NetConfig, TrainConfig, ACTION_CLASSES, CUBE_DIM, GRIPPER_DIM, HEAD_DIM, JOINT_DIM, VELOCITY_DIM};
pub use deploy::{image_to_input, NetOutput};
pub use loss::{loss, LossBreakdown, Targets};
pub use model::{Cache, Chunk, ControllerNet, Layout, StreamState};
pub use ops::{col2im, gemm, im2col, ConvShape};
pub use train::{class_weights, dataset_loss, episode_streams, train, train_on, Normalization, TrainOutcome};

use crate::dataset::DatasetError;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
