//! World description and every randomised sampler: colours, placements,
//! camera, light, start joints, distractors and procedural textures.

mod config;
mod noise;
mod sample;
mod texture;

use serde::{Deserialize, Serialize};

use crate::mathkin::{Joints, Transform, Vec3};

pub use config::{
    apply_ablation, ColorDist, RandomisationConfig, Rect, SidePolicy, Switches, ABLATIONS,
    CONFIG_MAGIC,
};
pub use noise::{perlin, Perlin};
pub use sample::{mean_scene, sample_scene, sample_scene_with};
pub use texture::{to_u8, synthesize_texture, synthesize_with, Composition, Palette, TextureMap, TextureParams};

pub type Color = [f64; 3];

/// Table top extent (world x and y, meters); the table surface is the z = 0 plane.
pub const TABLE: Rect = Rect {
    x: [-0.35, 1.0],
    y: [-0.85, 0.85],
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("unknown ablation switch `{0}`")]
    UnknownSwitch(String),
    #[error("invalid randomisation config: {0}")]
    InvalidConfig(String),
    #[error("cannot parse randomisation config: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    /// Centre of the cube.
    pub position: Vec3,
    pub edge: f64,
    pub color: Color,
}

impl Cube {
    pub fn half(&self) -> f64 {
        0.5 * self.edge
    }
}

/// Open-top box resting on the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basket {
    /// Centre of the basket's base, on the table.
    pub position: Vec3,
    /// Inner half-extents of the opening.
    pub half_extents: [f64; 2],
    pub depth: f64,
    pub wall: f64,
    pub color: Color,
}

impl Basket {
    pub fn rim_height(&self) -> f64 {
        self.position.z + self.depth
    }

    pub fn floor_height(&self) -> f64 {
        self.position.z + self.wall
    }

    pub fn opening_center(&self) -> Vec3 {
        Vec3::new(self.position.x, self.position.y, self.rim_height())
    }

    pub fn inside_opening(&self, x: f64, y: f64) -> bool {
        (x - self.position.x).abs() < self.half_extents[0]
            && (y - self.position.y).abs() < self.half_extents[1]
    }

    pub fn inside_outer(&self, x: f64, y: f64) -> bool {
        (x - self.position.x).abs() < self.half_extents[0] + self.wall
            && (y - self.position.y).abs() < self.half_extents[1] + self.wall
    }

    /// True when `p` lies in the interior volume.
    pub fn contains(&self, p: &Vec3) -> bool {
        self.inside_opening(p.x, p.y) && p.z >= self.floor_height() && p.z <= self.rim_height()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Box,
    Sphere,
    Cylinder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distractor {
    pub shape: ShapeKind,
    /// Centre; distractors rest on the table so `z = size / 2`.
    pub position: Vec3,
    /// Full extent (edge length or diameter).
    pub size: f64,
    pub color: Color,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    /// Camera-to-world pose; the camera looks along its +z axis with +y down.
    pub pose: Transform,
    pub fov_y: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Light {
    /// Unit direction the light travels.
    pub direction: Vec3,
    pub intensity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub cube: Cube,
    pub basket: Basket,
    pub basket_side: Side,
    pub arm_base_height: f64,
    pub arm_color: Color,
    pub start_joints: Joints,
    pub camera: CameraSpec,
    pub light: Light,
    pub distractors: Vec<Distractor>,
    pub table_texture: TextureMap,
    pub background_texture: TextureMap,
    pub shadows_enabled: bool,
    /// Distractors dropped because no free spot was found within the attempt budget.
    pub placement_failures: u32,
}

impl Scene {
    /// Canonical byte form (JSON) used for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("scene serializes")
    }
}
