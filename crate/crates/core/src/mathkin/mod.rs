//! Rigid transforms, forward/inverse kinematics of the 6-DOF arm and
//! straight-line Cartesian paths.

mod arm;
mod ik;
mod path;
mod transform;

pub use arm::{ArmModel, JointLink, JointState, Joints, ARM_MAGIC, DOF};
pub use ik::{pose_error, solve_ik, IkOptions, IkSolution};
pub use path::{
    interpolate_path, path_to_joint_trajectory, trajectory_len, CartesianPath, VelocityProfile,
};
pub use transform::{
    axis_angle_matrix, look_at, rotation_exp, rotation_log, Mat3, Transform, Vec3,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("IK did not converge after {iterations} iterations (pos {pos_error:.2e} m, rot {rot_error:.2e} rad)")]
    NoConvergence {
        iterations: usize,
        pos_error: f64,
        rot_error: f64,
    },
    #[error("time {t} outside path duration [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    #[error("invalid arm model: {0}")]
    InvalidModel(String),
    #[error("cannot parse arm model: {0}")]
    Parse(String),
}

/// Tool orientation used for every scripted waypoint: tool z-axis pointing straight down.
pub fn top_down_rotation() -> Mat3 {
    axis_angle_matrix(&Vec3::y(), std::f64::consts::PI)
}
