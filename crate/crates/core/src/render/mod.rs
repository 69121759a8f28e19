//! Deterministic software rasterizer for observation images.

mod camera;
mod image;
mod mesh;
mod raster;

pub use camera::{project_point, Camera};
pub use image::Image;
pub use mesh::{build_render_list, RenderList, RenderState, Tri};
pub use raster::{rasterize, SHADOW_FACTOR};

use crate::mathkin::{ArmModel, Vec3};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("bad image: {0}")]
    BadImage(String),
}

/// Renders the scene with the arm, cube and gripper in `state`.
pub fn render(scene: &Scene, arm: &ArmModel, state: &RenderState, camera: &Camera) -> Image {
    rasterize(&build_render_list(scene, arm, state), camera)
}

/// Renders the scene at its initial state through its own camera.
pub fn render_initial(scene: &Scene, arm: &ArmModel) -> Image {
    render(scene, arm, &RenderState::initial(scene), &Camera::from_spec(&scene.camera))
}

/// Draws a 5x5 cross centred on the projection of `world_point`; no-op when
/// the point is behind the camera or outside the image.
pub fn overlay_marker(img: &Image, camera: &Camera, world_point: &Vec3, color: [u8; 3]) -> Image {
    let mut out = img.clone();
    let Ok((u, v, _)) = project_point(camera, world_point) else {
        return out;
    };
    let (cx, cy) = (u.floor() as i64, v.floor() as i64);
    if cx < 0 || cy < 0 || cx >= img.width as i64 || cy >= img.height as i64 {
        return out;
    }
    for d in -2..=2i64 {
        for (x, y) in [(cx + d, cy), (cx, cy + d)] {
            if x >= 0 && y >= 0 && x < img.width as i64 && y < img.height as i64 {
                out.set(x as u32, y as u32, color);
            }
        }
    }
    out
}
