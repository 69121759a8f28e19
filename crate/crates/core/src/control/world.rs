use serde::{Deserialize, Serialize};

use super::pid::{pid_step, Motor, PidGains, PidState};
use crate::mathkin::{axis_angle_matrix, ArmModel, JointState, Joints, Transform, Vec3, DOF};
use crate::scene::{Basket, Scene};

/// Object id of the cube; it is the only graspable object.
pub const CUBE_ID: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aperture {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub aperture: Aperture,
    pub attached_object: Option<u32>,
}

impl GripperState {
    pub fn open() -> Self {
        Self {
            aperture: Aperture::Open,
            attached_object: None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.aperture == Aperture::Closed
    }
}

#[derive(Clone, Debug)]
struct Support {
    center: [f64; 2],
    half: f64,
    top: f64,
}

/// Mutable state of one episode or trial: arm, cube and gripper. Grasping is
/// kinematic attachment and releasing drops the cube straight down onto the
/// first surface below its centre.
#[derive(Clone, Debug)]
pub struct World {
    pub arm: ArmModel,
    pub joints: JointState,
    pub cube: Transform,
    pub cube_half: f64,
    pub gripper: GripperState,
    attach_offset: Option<Transform>,
    basket: Basket,
    supports: Vec<Support>,
}

impl World {
    /// World at the scene's start configuration, with the arm base raised to
    /// the scene's base height.
    pub fn new(scene: &Scene, model: &ArmModel) -> Self {
        let supports = scene
            .distractors
            .iter()
            .map(|d| Support {
                center: [d.position.x, d.position.y],
                half: 0.5 * d.size,
                top: d.size,
            })
            .collect();
        Self {
            arm: model.with_base_height(scene.arm_base_height),
            joints: JointState {
                angles: scene.start_joints,
                velocities: [0.0; DOF],
            },
            cube: Transform::from_translation(scene.cube.position),
            cube_half: scene.cube.half(),
            gripper: GripperState::open(),
            attach_offset: None,
            basket: scene.basket.clone(),
            supports,
        }
    }

    pub fn tip(&self) -> Transform {
        self.arm.forward_kinematics(&self.joints.angles)
    }

    pub fn cube_position(&self) -> Vec3 {
        self.cube.translation
    }

    pub fn tip_to_cube(&self) -> f64 {
        (self.tip().translation - self.cube.translation).norm()
    }

    pub fn is_attached(&self) -> bool {
        self.attach_offset.is_some()
    }

    /// Cube pose in the tip frame while attached.
    pub fn attach_offset(&self) -> Option<&Transform> {
        self.attach_offset.as_ref()
    }

    fn carry(&mut self) {
        if let Some(off) = &self.attach_offset {
            self.cube = self.tip().compose(off);
        }
    }

    /// Places the arm at `angles` directly (ideal tracking).
    pub fn set_joints(&mut self, angles: Joints, velocities: [f64; DOF]) {
        self.joints = JointState { angles, velocities };
        self.carry();
    }

    /// Closes the gripper; the cube attaches when the tip is within `grasp_radius`
    /// of its centre. Returns whether it attached.
    pub fn close_gripper(&mut self, grasp_radius: f64) -> bool {
        if self.gripper.is_closed() {
            return self.is_attached();
        }
        self.gripper.aperture = Aperture::Closed;
        if self.tip_to_cube() <= grasp_radius {
            self.attach_offset = Some(self.tip().inverse().compose(&self.cube));
            self.gripper.attached_object = Some(CUBE_ID);
            true
        } else {
            false
        }
    }

    /// Opens the gripper and lets an attached cube fall.
    pub fn open_gripper(&mut self) {
        self.gripper = GripperState::open();
        if self.attach_offset.take().is_some() {
            self.drop_cube();
        }
    }

    fn support_height(&self, x: f64, y: f64) -> f64 {
        let b = &self.basket;
        if b.inside_opening(x, y) {
            return b.floor_height();
        }
        if b.inside_outer(x, y) {
            return b.rim_height();
        }
        self.supports
            .iter()
            .filter(|s| (x - s.center[0]).abs() < s.half && (y - s.center[1]).abs() < s.half)
            .map(|s| s.top)
            .fold(0.0, f64::max)
    }

    fn drop_cube(&mut self) {
        let p = self.cube.translation;
        let rest = self.support_height(p.x, p.y) + self.cube_half;
        let r = self.cube.rotation;
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        self.cube = Transform::new(
            axis_angle_matrix(&Vec3::z(), yaw),
            Vec3::new(p.x, p.y, rest.min(p.z)),
        );
    }

    /// Basket-containment predicate on the current cube centre.
    pub fn cube_in_basket(&self) -> bool {
        self.basket.contains(&self.cube.translation)
    }
}

/// PID velocity loop driving first-order joint motors.
#[derive(Clone, Debug)]
pub struct Actuator {
    pub gains: PidGains,
    pub motor: Motor,
    state: PidState,
}

impl Actuator {
    pub fn new(gains: PidGains, motor: Motor) -> Self {
        Self {
            gains,
            motor,
            state: PidState::default(),
        }
    }

    /// Tracks `target_v` for one period. Joints stop at their limits.
    pub fn step(&mut self, world: &mut World, target_v: &[f64; DOF], dt: f64) {
        let cmd = pid_step(&self.gains, target_v, &world.joints.velocities, &mut self.state, dt);
        let mut q = world.joints.angles;
        let mut v = [0.0; DOF];
        for i in 0..DOF {
            let (v_next, dq) = self.motor.step(world.joints.velocities[i], cmd[i], dt);
            let (lo, hi) = world.arm.joint_limits[i];
            let moved = q[i] + dq;
            q[i] = moved.clamp(lo, hi);
            v[i] = if moved == q[i] { v_next } else { 0.0 };
        }
        world.set_joints(q, v);
    }
}

impl Default for Actuator {
    fn default() -> Self {
        Self::new(PidGains::default(), Motor::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{mean_scene, RandomisationConfig, Side};

    fn world() -> (Scene, World) {
        let scene = mean_scene(&RandomisationConfig::default(), Side::Left);
        let w = World::new(&scene, &ArmModel::reference());
        (scene, w)
    }

    #[test]
    fn far_close_does_not_attach() {
        let (scene, mut w) = world();
        let before = w.cube.clone();
        assert!(w.tip_to_cube() > 0.1);
        assert!(!w.close_gripper(0.02));
        assert!(w.gripper.is_closed() && w.gripper.attached_object.is_none());
        w.open_gripper();
        assert_eq!(w.cube, before);
        assert_eq!(w.cube.translation, scene.cube.position);
    }

    #[test]
    fn drop_lands_on_first_support() {
        let (scene, mut w) = world();
        let b = scene.basket.clone();
        let cases = [
            (b.position.x, b.position.y, b.floor_height()),
            (b.position.x + b.half_extents[0] + 0.5 * b.wall, b.position.y, b.rim_height()),
            (0.9, 0.0, 0.0),
        ];
        for (x, y, surface) in cases {
            w.attach_offset = Some(Transform::identity());
            w.cube = Transform::from_translation(Vec3::new(x, y, 0.5));
            w.open_gripper();
            assert!((w.cube.translation.z - (surface + w.cube_half)).abs() < 1e-12);
            assert_eq!((w.cube.translation.x, w.cube.translation.y), (x, y));
        }
    }

    #[test]
    fn actuator_respects_limits() {
        let (_, mut w) = world();
        let mut a = Actuator::default();
        for _ in 0..400 {
            a.step(&mut w, &[3.0; DOF], 0.05);
            assert!(w.arm.within_limits(&w.joints.angles));
        }
    }
}
