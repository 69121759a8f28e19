use serde::{Deserialize, Serialize};

use super::plan::{GripperAction, ScriptParams, StageId, StagePlan};
use super::world::World;
use super::ControlError;
use crate::mathkin::{path_to_joint_trajectory, ArmModel, CartesianPath, IkOptions, JointState, Vec3, DOF};
use crate::scene::Scene;

/// Largest per-step joint change accepted from trajectory IK before the
/// episode is treated as a planning failure (a branch flip of the solver).
pub const MAX_JOINT_STEP: f64 = 0.25;

/// What the demonstrator observed and commanded at one control step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub stage: StageId,
    /// Joint angles and the commanded joint velocities for this step.
    pub joints: JointState,
    pub action: GripperAction,
    pub tip_position: Vec3,
    pub cube_position: Vec3,
    pub gripper_closed: bool,
}

/// Receives every frame of an episode as it is executed.
pub trait EpisodeRecorder {
    fn record(&mut self, frame: &Frame, world: &World);
}

impl EpisodeRecorder for Vec<Frame> {
    fn record(&mut self, frame: &Frame, _world: &World) {
        self.push(frame.clone());
    }
}

/// Discards frames.
pub struct NullRecorder;

impl EpisodeRecorder for NullRecorder {
    fn record(&mut self, _frame: &Frame, _world: &World) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    /// Final cube centre lies inside the basket.
    pub success: bool,
    pub grasped: bool,
    pub final_cube_position: Vec3,
    pub steps: usize,
    pub stage_steps: [usize; 5],
}

fn record(world: &World, stage: StageId, velocities: [f64; DOF], action: GripperAction, rec: &mut dyn EpisodeRecorder) {
    let frame = Frame {
        stage,
        joints: JointState {
            angles: world.joints.angles,
            velocities,
        },
        action,
        tip_position: world.tip().translation,
        cube_position: world.cube_position(),
        gripper_closed: world.gripper.is_closed(),
    };
    rec.record(&frame, world);
}

/// Runs the scripted stages with ideal joint tracking, handing each frame to
/// `recorder`. Motion stages record every trajectory sample except the last,
/// which becomes the first sample of the following stage; gripper stages
/// record `gripper_frames` stationary frames and toggle the gripper after the first.
pub fn execute_episode(
    plans: &[StagePlan],
    scene: &Scene,
    model: &ArmModel,
    params: &ScriptParams,
    recorder: &mut dyn EpisodeRecorder,
) -> Result<EpisodeOutcome, ControlError> {
    let order: Vec<StageId> = plans.iter().map(|p| p.stage_id).collect();
    if order != StageId::ALL {
        return Err(ControlError::InvalidPlan(format!("stage order {order:?}")));
    }
    let mut world = World::new(scene, model);
    let mut stage_steps = [0usize; 5];
    let mut grasped = false;
    let ik = IkOptions::default();
    for plan in plans {
        let stage = plan.stage_id;
        match (&plan.waypoint, plan.gripper_command) {
            (Some(target), _) => {
                let path = CartesianPath::with_speed(
                    world.tip(),
                    target.clone(),
                    params.speed,
                    params.min_segment_duration,
                    params.profile,
                );
                let traj = path_to_joint_trajectory(&world.arm, &path, &world.joints.angles, params.dt, &ik)
                    .map_err(|source| ControlError::PlanningFailed { stage, source })?;
                for (k, s) in traj.iter().enumerate().take(traj.len() - 1) {
                    let delta = s.velocities.iter().map(|v| (v * params.dt).abs()).fold(0.0, f64::max);
                    if delta > MAX_JOINT_STEP {
                        return Err(ControlError::JointJump { stage, step: k, delta });
                    }
                    world.set_joints(s.angles, s.velocities);
                    record(&world, stage, s.velocities, GripperAction::NoOp, recorder);
                    stage_steps[stage.index()] += 1;
                }
                let last = traj.last().expect("trajectory has at least one sample");
                world.set_joints(last.angles, [0.0; DOF]);
            }
            (None, action @ (GripperAction::Close | GripperAction::Open)) => {
                for k in 0..params.gripper_frames.max(1) {
                    record(&world, stage, [0.0; DOF], action, recorder);
                    stage_steps[stage.index()] += 1;
                    if k > 0 {
                        continue;
                    }
                    if action == GripperAction::Close {
                        grasped = world.close_gripper(params.grasp_radius);
                    } else {
                        world.open_gripper();
                    }
                }
            }
            (None, GripperAction::NoOp) => {
                return Err(ControlError::InvalidPlan(format!("{stage:?} has neither waypoint nor gripper command")));
            }
        }
    }
    Ok(EpisodeOutcome {
        success: world.cube_in_basket(),
        grasped,
        final_cube_position: world.cube_position(),
        steps: stage_steps.iter().sum(),
        stage_steps,
    })
}

/// Plans and executes the scripted demonstration for `scene`.
pub fn run_scripted(
    scene: &Scene,
    model: &ArmModel,
    params: &ScriptParams,
    recorder: &mut dyn EpisodeRecorder,
) -> Result<EpisodeOutcome, ControlError> {
    let plans = super::plan_episode(scene, params);
    execute_episode(&plans, scene, model, params, recorder)
}
