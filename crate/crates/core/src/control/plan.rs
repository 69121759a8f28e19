use serde::{Deserialize, Serialize};

use crate::mathkin::{top_down_rotation, Transform, Vec3, VelocityProfile};
use crate::scene::Scene;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    ReachAboveCube = 0,
    CloseGripper = 1,
    Lift = 2,
    TransportToBasket = 3,
    Release = 4,
}

impl StageId {
    pub const ALL: [StageId; 5] = [
        StageId::ReachAboveCube,
        StageId::CloseGripper,
        StageId::Lift,
        StageId::TransportToBasket,
        StageId::Release,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperAction {
    Open,
    Close,
    NoOp,
}

impl GripperAction {
    pub const ALL: [GripperAction; 3] = [GripperAction::Open, GripperAction::Close, GripperAction::NoOp];

    pub fn index(self) -> usize {
        match self {
            GripperAction::Open => 0,
            GripperAction::Close => 1,
            GripperAction::NoOp => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stage_id: StageId,
    pub waypoint: Option<Transform>,
    pub gripper_command: GripperAction,
}

/// Heights, speeds and tolerances of the scripted demonstrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptParams {
    /// Height of the reach waypoint relative to the cube's top face. Negative
    /// values put the tool tip inside the cube, which is where a grasp happens.
    pub approach_offset: f64,
    pub lift_height: f64,
    /// Height of the drop point above the basket rim.
    pub drop_clearance: f64,
    /// Largest tip-to-cube-centre distance at which closing the gripper attaches the cube.
    pub grasp_radius: f64,
    pub speed: f64,
    pub min_segment_duration: f64,
    pub profile: VelocityProfile,
    pub dt: f64,
    /// Stationary frames recorded by each gripper stage. The gripper toggles
    /// right after the first one, the rest show it holding its new state.
    pub gripper_frames: usize,
}

impl Default for ScriptParams {
    fn default() -> Self {
        Self {
            approach_offset: -0.025,
            lift_height: 0.10,
            drop_clearance: 0.15,
            grasp_radius: 0.02,
            speed: 0.10,
            min_segment_duration: 1.0,
            profile: VelocityProfile::default(),
            dt: 0.05,
            gripper_frames: 5,
        }
    }
}

fn down_at(p: Vec3) -> Transform {
    Transform::new(top_down_rotation(), p)
}

/// The fixed five-stage script for one scene.
pub fn plan_episode(scene: &Scene, params: &ScriptParams) -> Vec<StagePlan> {
    let cube = &scene.cube;
    let top = cube.position + Vec3::new(0.0, 0.0, cube.half());
    let reach = top + Vec3::new(0.0, 0.0, params.approach_offset);
    let lifted = reach + Vec3::new(0.0, 0.0, params.lift_height);
    let drop = scene.basket.opening_center() + Vec3::new(0.0, 0.0, params.drop_clearance);
    vec![
        StagePlan {
            stage_id: StageId::ReachAboveCube,
            waypoint: Some(down_at(reach)),
            gripper_command: GripperAction::NoOp,
        },
        StagePlan {
            stage_id: StageId::CloseGripper,
            waypoint: None,
            gripper_command: GripperAction::Close,
        },
        StagePlan {
            stage_id: StageId::Lift,
            waypoint: Some(down_at(lifted)),
            gripper_command: GripperAction::NoOp,
        },
        StagePlan {
            stage_id: StageId::TransportToBasket,
            waypoint: Some(down_at(drop)),
            gripper_command: GripperAction::NoOp,
        },
        StagePlan {
            stage_id: StageId::Release,
            waypoint: None,
            gripper_command: GripperAction::Open,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{sample_scene, RandomisationConfig};

    #[test]
    fn reach_waypoint_is_offset_from_cube_top() {
        let cfg = RandomisationConfig::default();
        let mut scene = sample_scene(&cfg, 1);
        scene.cube.position = Vec3::new(0.4, 0.1, scene.cube.half());
        let p = ScriptParams::default();
        let plans = plan_episode(&scene, &p);
        let w = plans[0].waypoint.as_ref().unwrap().translation;
        assert_eq!((w.x, w.y), (0.4, 0.1));
        assert!((w.z - (0.0 + scene.cube.edge + p.approach_offset)).abs() < 1e-15);
    }

    #[test]
    fn stages_follow_fixed_order() {
        let cfg = RandomisationConfig::default();
        for s in 0..20 {
            let plans = plan_episode(&sample_scene(&cfg, s), &ScriptParams::default());
            let ids: Vec<StageId> = plans.iter().map(|p| p.stage_id).collect();
            assert_eq!(ids, StageId::ALL.to_vec());
            assert!(plans[1].waypoint.is_none() && plans[4].waypoint.is_none());
            assert_eq!(plans[1].gripper_command, GripperAction::Close);
            assert_eq!(plans[4].gripper_command, GripperAction::Open);
        }
    }

    #[test]
    fn drop_waypoint_lies_over_opening() {
        let mut cfg = RandomisationConfig::default();
        cfg.switches.textures = false;
        for s in 0..100 {
            let scene = sample_scene(&cfg, s);
            let w = plan_episode(&scene, &ScriptParams::default())[3].waypoint.clone().unwrap();
            let b = &scene.basket;
            assert!((w.translation.x - b.position.x).abs() <= b.half_extents[0]);
            assert!((w.translation.y - b.position.y).abs() <= b.half_extents[1]);
            assert!(w.translation.z > b.rim_height());
        }
    }
}
