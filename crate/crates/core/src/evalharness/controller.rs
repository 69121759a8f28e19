use std::collections::VecDeque;

use crate::control::{run_scripted, Frame, GripperAction, ScriptParams, World};
use crate::mathkin::{ArmModel, Joints, DOF};
use crate::net::{Checkpoint, ControllerNet, Normalization};
use crate::render::Image;
use crate::scene::Scene;

use super::EvalError;

/// What a controller sees at one control step.
pub struct Observation<'a> {
    /// Rendered camera image, present when [`Controller::needs_image`] is true.
    pub image: Option<&'a Image>,
    pub joint_angles: &'a Joints,
    /// Full simulator state; only privileged controllers may look at it.
    pub world: &'a World,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Command {
    pub velocities: [f64; DOF],
    pub action: GripperAction,
}

pub trait Controller {
    fn name(&self) -> String;

    /// Called once before the first step of a trial.
    fn reset(&mut self, scene: &Scene, model: &ArmModel) -> Result<(), EvalError>;

    fn act(&mut self, obs: &Observation) -> Result<Command, EvalError>;

    fn needs_image(&self) -> bool {
        true
    }
}

/// Commands nothing, ever.
pub struct ZeroController;

impl Controller for ZeroController {
    fn name(&self) -> String {
        "zero".into()
    }

    fn reset(&mut self, _: &Scene, _: &ArmModel) -> Result<(), EvalError> {
        Ok(())
    }

    fn act(&mut self, _: &Observation) -> Result<Command, EvalError> {
        Ok(Command {
            velocities: [0.0; DOF],
            action: GripperAction::NoOp,
        })
    }

    fn needs_image(&self) -> bool {
        false
    }
}

/// Closed-loop replay of the scripted demonstration: tracks the planned joint
/// trajectory with a position correction and only fires a gripper event once
/// the tool tip has settled at the planned pose.
pub struct OracleController {
    pub params: ScriptParams,
    /// Position-correction gain, 1/s.
    pub gain: f64,
    /// Tip distance from the planned pose below which gripper events fire.
    pub settle_tolerance: f64,
    reference: Vec<Frame>,
    next: usize,
}

impl OracleController {
    pub fn new(params: ScriptParams) -> Self {
        Self {
            params,
            gain: 4.0,
            settle_tolerance: 1e-3,
            reference: Vec::new(),
            next: 0,
        }
    }
}

impl Default for OracleController {
    fn default() -> Self {
        Self::new(ScriptParams::default())
    }
}

impl Controller for OracleController {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn reset(&mut self, scene: &Scene, model: &ArmModel) -> Result<(), EvalError> {
        let mut frames: Vec<Frame> = Vec::new();
        run_scripted(scene, model, &self.params, &mut frames)?;
        self.reference = frames;
        self.next = 0;
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, EvalError> {
        let q = obs.joint_angles;
        let Some(frame) = self.reference.get(self.next).or(self.reference.last()) else {
            return Err(EvalError::Controller("oracle used before reset".into()));
        };
        let target = &frame.joints.angles;
        let mut v = [0.0; DOF];
        for i in 0..DOF {
            v[i] = self.gain * (target[i] - q[i]);
        }
        if self.next >= self.reference.len() {
            return Ok(Command {
                velocities: v,
                action: GripperAction::NoOp,
            });
        }
        if frame.action == GripperAction::NoOp {
            for i in 0..DOF {
                v[i] += frame.joints.velocities[i];
            }
            self.next += 1;
            return Ok(Command {
                velocities: v,
                action: GripperAction::NoOp,
            });
        }
        let arm = &obs.world.arm;
        let err = (arm.forward_kinematics(q).translation - arm.forward_kinematics(target).translation).norm();
        let still = obs.world.joints.velocities.iter().all(|w| w.abs() < 0.02);
        if err < self.settle_tolerance && still {
            self.next += 1;
            return Ok(Command {
                velocities: [0.0; DOF],
                action: frame.action,
            });
        }
        Ok(Command {
            velocities: v,
            action: GripperAction::NoOp,
        })
    }

    fn needs_image(&self) -> bool {
        false
    }
}

/// Deployed network: keeps the last `window` observations and its recurrent state.
pub struct NetController {
    pub net: ControllerNet,
    pub normalization: Normalization,
    /// Added to the gripper logits before the argmax.
    pub gripper_bias: [f64; 3],
    label: String,
    images: VecDeque<Image>,
    joints: VecDeque<[f64; DOF]>,
}

impl NetController {
    pub fn new(net: ControllerNet, normalization: Normalization, label: impl Into<String>) -> Self {
        Self {
            net,
            normalization,
            gripper_bias: [0.0; 3],
            label: label.into(),
            images: VecDeque::new(),
            joints: VecDeque::new(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint, label: impl Into<String>) -> Result<Self, EvalError> {
        Ok(Self::new(ck.net()?, ck.normalization.clone(), label))
    }
}

impl Controller for NetController {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn reset(&mut self, _: &Scene, _: &ArmModel) -> Result<(), EvalError> {
        self.net.reset_state();
        self.images.clear();
        self.joints.clear();
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, EvalError> {
        let image = obs
            .image
            .ok_or_else(|| EvalError::Controller("network controller needs an image".into()))?;
        let w = self.net.config.window;
        if self.images.is_empty() {
            // pad the first window with copies of the first frame
            for _ in 0..w - 1 {
                self.images.push_back(image.clone());
                self.joints.push_back(self.normalization.joints(obs.joint_angles));
            }
        }
        self.images.push_back(image.clone());
        self.joints.push_back(self.normalization.joints(obs.joint_angles));
        while self.images.len() > w {
            self.images.pop_front();
            self.joints.pop_front();
        }
        let images: Vec<Image> = self.images.iter().cloned().collect();
        let joints: Vec<[f64; DOF]> = self.joints.iter().copied().collect();
        let out = self.net.forward(&images, &joints)?;
        Ok(Command {
            velocities: self.normalization.velocities(&out.velocities),
            action: GripperAction::from_index(out.action_with_bias(&self.gripper_bias)).expect("three gripper classes"),
        })
    }
}
