use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::mathkin::{Transform, Vec3};
use crate::scene::CameraSpec;

/// Pinhole camera. The pose maps camera coordinates (x right, y down, z
/// forward) to world coordinates; the principal point is the image centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub pose: Transform,
    pub fov_y: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

impl Camera {
    pub fn new(pose: Transform, fov_y: f64, width: u32, height: u32) -> Self {
        assert!(fov_y > 0.0 && fov_y < std::f64::consts::PI, "fov_y out of range");
        assert!(width > 0 && height > 0, "empty image");
        Self {
            pose,
            fov_y,
            width,
            height,
            near: 0.01,
            far: 20.0,
        }
    }

    pub fn from_spec(spec: &CameraSpec) -> Self {
        Self::new(spec.pose, spec.fov_y, spec.width, spec.height)
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        0.5 * self.height as f64 / (0.5 * self.fov_y).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.pose.inverse().transform_point(p)
    }

    /// Pixel coordinates of a camera-frame point in front of the camera.
    pub fn project_camera_point(&self, pc: &Vec3) -> (f64, f64) {
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        (cx + f * pc.x / pc.z, cy + f * pc.y / pc.z)
    }

    /// World-space direction of the ray through pixel coordinates `(u, v)`.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vec3 {
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        self.pose
            .transform_vector(&Vec3::new((u - cx) / f, (v - cy) / f, 1.0))
            .normalize()
    }
}

/// Pinhole projection of a world point to `(u, v, depth)`, where depth is the
/// distance along the optical axis.
pub fn project_point(camera: &Camera, world_point: &Vec3) -> Result<(f64, f64, f64), RenderError> {
    let pc = camera.to_camera(world_point);
    if pc.z < camera.near {
        return Err(RenderError::BehindCamera { depth: pc.z });
    }
    let (u, v) = camera.project_camera_point(&pc);
    Ok((u, v, pc.z))
}
