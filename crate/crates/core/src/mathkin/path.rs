use serde::{Deserialize, Serialize};

use super::arm::{ArmModel, JointState, Joints, DOF};
use super::ik::{solve_ik, IkOptions};
use super::transform::{rotation_exp, rotation_log, Transform};
use super::KinematicsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VelocityProfile {
    Constant,
    /// Accelerate over `ramp_fraction` of the duration, cruise, then decelerate symmetrically.
    Trapezoidal { ramp_fraction: f64 },
}

impl Default for VelocityProfile {
    fn default() -> Self {
        VelocityProfile::Trapezoidal { ramp_fraction: 0.2 }
    }
}

impl VelocityProfile {
    /// Normalized arc length in [0, 1] at time `t` of a motion lasting `duration`.
    pub fn progress(&self, t: f64, duration: f64) -> f64 {
        if duration <= 0.0 {
            return 1.0;
        }
        match *self {
            VelocityProfile::Constant => t / duration,
            VelocityProfile::Trapezoidal { ramp_fraction } => {
                let ramp = ramp_fraction.clamp(1e-9, 0.5) * duration;
                let peak = 1.0 / (duration - ramp);
                let accel = peak / ramp;
                if t <= ramp {
                    0.5 * accel * t * t
                } else if t < duration - ramp {
                    0.5 * peak * ramp + peak * (t - ramp)
                } else {
                    let r = duration - t;
                    1.0 - 0.5 * accel * r * r
                }
            }
        }
    }
}

/// Straight-line Cartesian motion between two tool poses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianPath {
    pub start: Transform,
    pub end: Transform,
    pub duration: f64,
    pub profile: VelocityProfile,
}

impl CartesianPath {
    pub fn new(start: Transform, end: Transform, duration: f64, profile: VelocityProfile) -> Self {
        Self {
            start,
            end,
            duration,
            profile,
        }
    }

    /// Duration for covering the path at `mean_speed`, never shorter than `min_duration`.
    pub fn with_speed(
        start: Transform,
        end: Transform,
        mean_speed: f64,
        min_duration: f64,
        profile: VelocityProfile,
    ) -> Self {
        let length = (end.translation - start.translation).norm();
        let duration = (length / mean_speed).max(min_duration);
        Self::new(start, end, duration, profile)
    }

    pub fn length(&self) -> f64 {
        (self.end.translation - self.start.translation).norm()
    }
}

pub fn interpolate_path(path: &CartesianPath, t: f64) -> Result<Transform, KinematicsError> {
    if !(0.0..=path.duration).contains(&t) {
        return Err(KinematicsError::OutOfRange {
            t,
            duration: path.duration,
        });
    }
    if t == 0.0 {
        return Ok(path.start);
    }
    if t == path.duration {
        return Ok(path.end);
    }
    let s = path.profile.progress(t, path.duration);
    let translation = path.start.translation * (1.0 - s) + path.end.translation * s;
    let rel = rotation_log(&(path.start.rotation.transpose() * path.end.rotation));
    let rotation = path.start.rotation * rotation_exp(&(rel * s));
    Ok(Transform::new(rotation, translation))
}

/// Number of samples for a path of `duration` at period `dt`.
pub fn trajectory_len(duration: f64, dt: f64) -> usize {
    (duration / dt - 1e-9).ceil().max(0.0) as usize + 1
}

/// Samples the path every `dt`, solving IK seeded by the previous sample.
/// Velocities are forward differences, so `angles[k] + velocities[k] * dt == angles[k + 1]`.
pub fn path_to_joint_trajectory(
    model: &ArmModel,
    path: &CartesianPath,
    q0: &Joints,
    dt: f64,
    opts: &IkOptions,
) -> Result<Vec<JointState>, KinematicsError> {
    assert!(dt > 0.0, "dt must be positive");
    let n = trajectory_len(path.duration, dt);
    let mut angles: Vec<Joints> = Vec::with_capacity(n);
    let mut seed = *q0;
    for k in 0..n {
        let t = (k as f64 * dt).min(path.duration);
        let pose = interpolate_path(path, t)?;
        let sol = solve_ik(model, &pose, &seed, opts)?;
        seed = sol.angles;
        angles.push(sol.angles);
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut velocities = [0.0; DOF];
        if k + 1 < n {
            for i in 0..DOF {
                velocities[i] = (angles[k + 1][i] - angles[k][i]) / dt;
            }
        }
        out.push(JointState {
            angles: angles[k],
            velocities,
        });
    }
    Ok(out)
}
