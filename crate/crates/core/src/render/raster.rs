use super::camera::Camera;
use super::image::Image;
use super::mesh::RenderList;
use crate::mathkin::Vec3;
use crate::scene::to_u8;

/// Brightness multiplier of table pixels inside a cast shadow.
pub const SHADOW_FACTOR: f64 = 0.55;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Surface {
    Background,
    Table,
    Object,
}

/// Screen-space vertex: pixel coordinates and camera depth.
#[derive(Clone, Copy)]
struct Sv {
    x: f64,
    y: f64,
    z: f64,
}

/// Clips a camera-space triangle to `z >= near` and projects it; returns a convex polygon.
fn clip_project(camera: &Camera, tri: &[Vec3; 3]) -> Vec<Sv> {
    let near = camera.near;
    let mut poly: Vec<Vec3> = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let (ina, inb) = (a.z >= near, b.z >= near);
        if ina {
            poly.push(a);
        }
        if ina != inb {
            let t = (near - a.z) / (b.z - a.z);
            poly.push(a + (b - a) * t);
        }
    }
    poly.iter()
        .map(|p| {
            let (x, y) = camera.project_camera_point(p);
            Sv { x, y, z: p.z }
        })
        .collect()
}

fn edge(a: &Sv, b: &Sv, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// Calls `f(index, depth)` for every pixel centre covered by the triangle, with
/// depth interpolated perspective-correctly.
fn cover(w: u32, h: u32, t: [&Sv; 3], mut f: impl FnMut(usize, f64)) {
    let area = edge(t[0], t[1], t[2].x, t[2].y);
    if area.abs() < 1e-12 {
        return;
    }
    let min_x = t.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let max_x = t.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = t.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
    let max_y = t.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
    let x0 = (min_x - 0.5).ceil().max(0.0) as i64;
    let x1 = ((max_x - 0.5).floor() as i64).min(w as i64 - 1);
    let y0 = (min_y - 0.5).ceil().max(0.0) as i64;
    let y1 = ((max_y - 0.5).floor() as i64).min(h as i64 - 1);
    for py in y0..=y1 {
        let cy = py as f64 + 0.5;
        for px in x0..=x1 {
            let cx = px as f64 + 0.5;
            let b0 = edge(t[1], t[2], cx, cy) / area;
            let b1 = edge(t[2], t[0], cx, cy) / area;
            let b2 = 1.0 - b0 - b1;
            if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                continue;
            }
            let inv_z = b0 / t[0].z + b1 / t[1].z + b2 / t[2].z;
            f((py * w as i64 + px) as usize, 1.0 / inv_z);
        }
    }
}

fn for_each_triangle(camera: &Camera, world: &[Vec3; 3], mut f: impl FnMut([&Sv; 3])) {
    let cam = [camera.to_camera(&world[0]), camera.to_camera(&world[1]), camera.to_camera(&world[2])];
    if cam.iter().all(|p| p.z < camera.near) || cam.iter().all(|p| p.z > camera.far) {
        return;
    }
    let poly = clip_project(camera, &cam);
    for k in 1..poly.len().saturating_sub(1) {
        f([&poly[0], &poly[k], &poly[k + 1]]);
    }
}

/// Z-buffered rasterization of a render list.
pub fn rasterize(list: &RenderList, camera: &Camera) -> Image {
    let (w, h) = (camera.width, camera.height);
    let n = (w * h) as usize;
    let mut depth = vec![f64::INFINITY; n];
    let mut color = vec![[0.0f64; 3]; n];
    let mut surface = vec![Surface::Background; n];
    let k = list.intensity;

    let eye = camera.pose.translation;
    let forward = camera.pose.rotation.column(2).into_owned();
    for py in 0..h {
        for px in 0..w {
            let i = (py * w + px) as usize;
            let (u, v) = (px as f64 + 0.5, py as f64 + 0.5);
            let bg = list.background.sample(u / w as f64, v / h as f64);
            color[i] = [bg[0] * k, bg[1] * k, bg[2] * k];
            let Some((tex, rect)) = &list.table else { continue };
            let dir = camera.ray_direction(u, v);
            if dir.z >= -1e-12 {
                continue;
            }
            let p = eye + dir * (-eye.z / dir.z);
            if !rect.contains(p.x, p.y) {
                continue;
            }
            let c = tex.sample(
                (p.x - rect.x[0]) / (rect.x[1] - rect.x[0]),
                (p.y - rect.y[0]) / (rect.y[1] - rect.y[0]),
            );
            depth[i] = (p - eye).dot(&forward);
            color[i] = [c[0] * k, c[1] * k, c[2] * k];
            surface[i] = Surface::Table;
        }
    }

    for tri in &list.triangles {
        for_each_triangle(camera, &tri.v, |t| {
            cover(w, h, t, |i, z| {
                if z < depth[i] {
                    depth[i] = z;
                    color[i] = tri.color;
                    surface[i] = Surface::Object;
                }
            })
        });
    }

    if let Some(d) = list.shadow_direction.filter(|d| d.z < -1e-3) {
        let mut shadow = vec![false; n];
        let flatten = |p: &Vec3| {
            let z = p.z.max(0.0);
            Vec3::new(p.x - d.x * z / d.z, p.y - d.y * z / d.z, 0.0)
        };
        for tri in &list.triangles {
            let flat = [flatten(&tri.v[0]), flatten(&tri.v[1]), flatten(&tri.v[2])];
            for_each_triangle(camera, &flat, |t| cover(w, h, t, |i, _| shadow[i] = true));
        }
        for i in 0..n {
            if shadow[i] && surface[i] == Surface::Table {
                for c in color[i].iter_mut() {
                    *c *= SHADOW_FACTOR;
                }
            }
        }
    }

    let mut img = Image::new(w, h);
    for (i, c) in color.iter().enumerate() {
        img.pixels[3 * i] = to_u8(c[0]);
        img.pixels[3 * i + 1] = to_u8(c[1]);
        img.pixels[3 * i + 2] = to_u8(c[2]);
    }
    img
}
