use nalgebra::{Matrix6, Vector6};

use super::arm::{ArmModel, Joints, DOF};
use super::transform::{rotation_log, Transform};
use super::KinematicsError;

const INITIAL_DAMPING: f64 = 1e-2;
const MIN_DAMPING: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkOptions {
    pub tol_pos: f64,
    pub tol_rot: f64,
    pub max_iters: usize,
    /// Extra attempts from fixed, spread-out seeds after the caller's seed fails.
    pub restarts: usize,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            tol_pos: 1e-5,
            tol_rot: 1e-4,
            max_iters: 200,
            restarts: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkSolution {
    pub angles: Joints,
    pub iterations: usize,
    pub pos_error: f64,
    pub rot_error: f64,
}

/// Pose error as a twist-like 6-vector: translation error then rotation vector.
pub fn pose_error(current: &Transform, target: &Transform) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let dr = rotation_log(&(target.rotation * current.rotation.transpose()));
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

fn split_norms(e: &Vector6<f64>) -> (f64, f64) {
    (e.fixed_rows::<3>(0).norm(), e.fixed_rows::<3>(3).norm())
}

impl IkOptions {
    /// Options for one-off targets far from any seed.
    pub fn global() -> Self {
        Self {
            restarts: 32,
            ..Self::default()
        }
    }
}

/// Damped least-squares IK. The damping starts at 1e-2, halves after every
/// accepted step and doubles after every rejected one. When the caller's seed
/// fails and `opts.restarts > 0`, the solve is repeated from a fixed Halton
/// sequence of configurations spanning the joint limits.
pub fn solve_ik(
    model: &ArmModel,
    target: &Transform,
    seed: &Joints,
    opts: &IkOptions,
) -> Result<IkSolution, KinematicsError> {
    let first = solve_from(model, target, seed, opts);
    if first.is_ok() || opts.restarts == 0 {
        return first;
    }
    let mut best = first;
    for k in 1..=opts.restarts {
        let mut q = [0.0; DOF];
        for (i, v) in q.iter_mut().enumerate() {
            let (lo, hi) = model.joint_limits[i];
            *v = lo + (hi - lo) * halton(k, PRIMES[i]);
        }
        let attempt = solve_from(model, target, &q, opts);
        if attempt.is_ok() {
            return attempt;
        }
        if let (
            Err(KinematicsError::NoConvergence { pos_error: a, .. }),
            Err(KinematicsError::NoConvergence { pos_error: b, .. }),
        ) = (&attempt, &best)
        {
            if a < b {
                best = attempt;
            }
        }
    }
    best
}

const PRIMES: [usize; DOF] = [2, 3, 5, 7, 11, 13];

fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn solve_from(
    model: &ArmModel,
    target: &Transform,
    seed: &Joints,
    opts: &IkOptions,
) -> Result<IkSolution, KinematicsError> {
    let mut q = *seed;
    model.clamp(&mut q);
    let mut err = pose_error(&model.forward_kinematics(&q), target);
    let (mut pos, mut rot) = split_norms(&err);
    if pos <= opts.tol_pos && rot <= opts.tol_rot {
        return Ok(IkSolution {
            angles: q,
            iterations: 0,
            pos_error: pos,
            rot_error: rot,
        });
    }
    let mut lambda = INITIAL_DAMPING;
    let mut residual = err.norm();
    for iter in 1..=opts.max_iters {
        let j = model.jacobian(&q);
        let jjt = j * j.transpose() + Matrix6::identity() * (lambda * lambda);
        let step = match jjt.cholesky() {
            Some(ch) => j.transpose() * ch.solve(&err),
            None => {
                lambda = (lambda * 2.0).min(MAX_DAMPING);
                continue;
            }
        };
        let mut candidate = q;
        for i in 0..DOF {
            candidate[i] += step[i];
        }
        model.clamp(&mut candidate);
        let cand_err = pose_error(&model.forward_kinematics(&candidate), target);
        let cand_res = cand_err.norm();
        if cand_res < residual {
            q = candidate;
            err = cand_err;
            residual = cand_res;
            (pos, rot) = split_norms(&err);
            lambda = (lambda * 0.5).max(MIN_DAMPING);
            if pos <= opts.tol_pos && rot <= opts.tol_rot {
                return Ok(IkSolution {
                    angles: q,
                    iterations: iter,
                    pos_error: pos,
                    rot_error: rot,
                });
            }
        } else {
            if lambda >= MAX_DAMPING {
                break;
            }
            lambda = (lambda * 2.0).min(MAX_DAMPING);
        }
    }
    Err(KinematicsError::NoConvergence {
        iterations: opts.max_iters,
        pos_error: pos,
        rot_error: rot,
    })
}
