use crate::control::World;
use crate::mathkin::{ArmModel, Joints, Mat3, Transform, Vec3, DOF};
use crate::scene::{Color, Rect, Scene, ShapeKind, TextureMap, TABLE};

const AMBIENT: f64 = 0.4;
const DIFFUSE: f64 = 0.6;
const SEGMENTS: usize = 12;

/// Shaded, world-space triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Tri {
    pub v: [Vec3; 3],
    pub color: Color,
}

/// Everything the rasterizer draws for one frame.
#[derive(Clone, Debug)]
pub struct RenderList {
    pub triangles: Vec<Tri>,
    pub table: Option<(TextureMap, Rect)>,
    pub background: TextureMap,
    /// Global light intensity applied to the unlit table and background.
    pub intensity: f64,
    /// Light travel direction when shadows are cast.
    pub shadow_direction: Option<Vec3>,
}

impl RenderList {
    /// List with nothing but a background.
    pub fn empty(background: TextureMap, intensity: f64) -> Self {
        Self {
            triangles: Vec::new(),
            table: None,
            background,
            intensity,
            shadow_direction: None,
        }
    }

    /// Appends a box lit from `light` (travel direction).
    pub fn add_box(&mut self, pose: &Transform, half: Vec3, color: &Color, light: &Vec3) {
        let mut b = Builder {
            light: light.normalize(),
            intensity: self.intensity,
            tris: Vec::new(),
        };
        b.oriented_box(pose, half, color);
        self.triangles.extend(b.tris);
    }
}

/// Dynamic state drawn on top of the static scene.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderState {
    pub joints: Joints,
    pub cube: Transform,
    pub gripper_closed: bool,
}

impl RenderState {
    pub fn initial(scene: &Scene) -> Self {
        Self {
            joints: scene.start_joints,
            cube: Transform::from_translation(scene.cube.position),
            gripper_closed: false,
        }
    }

    pub fn of_world(world: &World) -> Self {
        Self {
            joints: world.joints.angles,
            cube: world.cube,
            gripper_closed: world.gripper.is_closed(),
        }
    }
}

struct Builder {
    light: Vec3,
    intensity: f64,
    tris: Vec<Tri>,
}

impl Builder {
    fn shade(&self, base: &Color, normal: &Vec3) -> Color {
        let k = self.intensity * (AMBIENT + DIFFUSE * normal.dot(&-self.light).max(0.0));
        [base[0] * k, base[1] * k, base[2] * k]
    }

    /// Adds a triangle of a convex solid centred at `center`, shading with the outward normal.
    fn face(&mut self, a: Vec3, b: Vec3, c: Vec3, center: &Vec3, color: &Color) {
        let mut n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-15 {
            return;
        }
        n /= len;
        if n.dot(&((a + b + c) / 3.0 - center)) < 0.0 {
            n = -n;
        }
        let color = self.shade(color, &n);
        self.tris.push(Tri { v: [a, b, c], color });
    }

    fn quad(&mut self, q: [Vec3; 4], center: &Vec3, color: &Color) {
        self.face(q[0], q[1], q[2], center, color);
        self.face(q[0], q[2], q[3], center, color);
    }

    fn oriented_box(&mut self, pose: &Transform, half: Vec3, color: &Color) {
        let corner = |sx: f64, sy: f64, sz: f64| {
            pose.transform_point(&Vec3::new(sx * half.x, sy * half.y, sz * half.z))
        };
        let c = pose.translation;
        let s = [-1.0, 1.0];
        for &z in &s {
            self.quad([corner(-1.0, -1.0, z), corner(1.0, -1.0, z), corner(1.0, 1.0, z), corner(-1.0, 1.0, z)], &c, color);
        }
        for &y in &s {
            self.quad([corner(-1.0, y, -1.0), corner(1.0, y, -1.0), corner(1.0, y, 1.0), corner(-1.0, y, 1.0)], &c, color);
        }
        for &x in &s {
            self.quad([corner(x, -1.0, -1.0), corner(x, 1.0, -1.0), corner(x, 1.0, 1.0), corner(x, -1.0, 1.0)], &c, color);
        }
    }

    /// Vertical cylinder standing on its base centre.
    fn cylinder(&mut self, base: Vec3, radius: f64, height: f64, color: &Color) {
        let c = base + Vec3::new(0.0, 0.0, 0.5 * height);
        let ring = |k: usize, z: f64| {
            let a = std::f64::consts::TAU * k as f64 / SEGMENTS as f64;
            base + Vec3::new(radius * a.cos(), radius * a.sin(), z)
        };
        let top = base + Vec3::new(0.0, 0.0, height);
        for k in 0..SEGMENTS {
            let (a0, a1) = (ring(k, 0.0), ring(k + 1, 0.0));
            let (b0, b1) = (ring(k, height), ring(k + 1, height));
            self.quad([a0, a1, b1, b0], &c, color);
            self.face(b0, b1, top, &c, color);
            self.face(a0, a1, base, &c, color);
        }
    }

    fn sphere(&mut self, center: Vec3, radius: f64, color: &Color) {
        let rings = SEGMENTS / 2;
        let p = |i: usize, k: usize| {
            let th = std::f64::consts::PI * i as f64 / rings as f64;
            let ph = std::f64::consts::TAU * k as f64 / SEGMENTS as f64;
            center + radius * Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
        };
        for i in 0..rings {
            for k in 0..SEGMENTS {
                self.quad([p(i, k), p(i + 1, k), p(i + 1, k + 1), p(i, k + 1)], &center, color);
            }
        }
    }

    /// Box of square cross-section `width` spanning `a` to `b`, rolled with `frame`.
    fn segment(&mut self, a: Vec3, b: Vec3, frame: &Mat3, width: f64, color: &Color) {
        let d = b - a;
        let len = d.norm();
        if len < 1e-9 {
            return;
        }
        let z = d / len;
        let mut x = frame.column(0).into_owned();
        x -= z * z.dot(&x);
        if x.norm() < 1e-6 {
            x = frame.column(1).into_owned();
            x -= z * z.dot(&x);
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rot = Mat3::from_columns(&[x, y, z]);
        let pose = Transform::new(rot, 0.5 * (a + b));
        self.oriented_box(&pose, Vec3::new(0.5 * width, 0.5 * width, 0.5 * len), color);
    }
}

const LINK_WIDTHS: [f64; DOF + 1] = [0.08, 0.075, 0.065, 0.055, 0.05, 0.045, 0.04];
/// Fingers: half-gap between finger centres, open and closed.
const FINGER_OPEN: f64 = 0.06;
const FINGER_CLOSED: f64 = 0.031;
const PALM_BACK: f64 = 0.065;

/// Arm link boxes, gripper palm and fingers.
fn add_arm(b: &mut Builder, arm: &ArmModel, state: &RenderState, color: &Color) {
    let (frames, tip) = arm.joint_frames(&state.joints);
    let base = arm.base_pose.translation;
    b.segment(
        Vec3::new(base.x, base.y, 0.0),
        base + Vec3::new(0.0, 0.0, 1e-3),
        &arm.base_pose.rotation,
        0.14,
        color,
    );
    let mut prev = base;
    for i in 0..DOF {
        let next = frames[i].translation;
        let roll = if i + 1 < DOF { frames[i + 1].rotation } else { tip.rotation };
        b.segment(prev, next, &roll, LINK_WIDTHS[i], color);
        prev = next;
    }
    let palm = tip.transform_point(&Vec3::new(0.0, 0.0, -PALM_BACK));
    b.segment(prev, palm, &tip.rotation, LINK_WIDTHS[DOF], color);
    let palm_pose = Transform::new(tip.rotation, palm);
    b.oriented_box(&palm_pose, Vec3::new(0.075, 0.02, 0.01), color);
    let gap = if state.gripper_closed { FINGER_CLOSED } else { FINGER_OPEN };
    for s in [-1.0, 1.0] {
        let finger = Transform::new(tip.rotation, tip.transform_point(&Vec3::new(s * gap, 0.0, -0.025)));
        b.oriented_box(&finger, Vec3::new(0.006, 0.015, 0.035), color);
    }
}

/// Builds the triangle list for a scene in a given dynamic state.
pub fn build_render_list(scene: &Scene, arm: &ArmModel, state: &RenderState) -> RenderList {
    let light = scene.light.direction.normalize();
    let mut b = Builder {
        light,
        intensity: scene.light.intensity,
        tris: Vec::new(),
    };
    let arm = arm.with_base_height(scene.arm_base_height);
    add_arm(&mut b, &arm, state, &scene.arm_color);

    let half = scene.cube.half();
    b.oriented_box(&state.cube, Vec3::new(half, half, half), &scene.cube.color);

    let k = &scene.basket;
    let (hx, hy, w, d) = (k.half_extents[0], k.half_extents[1], k.wall, k.depth);
    let at = |x: f64, y: f64, z: f64| Transform::from_translation(k.position + Vec3::new(x, y, z));
    b.oriented_box(&at(0.0, 0.0, 0.5 * w), Vec3::new(hx + w, hy + w, 0.5 * w), &k.color);
    for s in [-1.0, 1.0] {
        b.oriented_box(&at(s * (hx + 0.5 * w), 0.0, 0.5 * d), Vec3::new(0.5 * w, hy + w, 0.5 * d), &k.color);
        b.oriented_box(&at(0.0, s * (hy + 0.5 * w), 0.5 * d), Vec3::new(hx, 0.5 * w, 0.5 * d), &k.color);
    }

    for dis in &scene.distractors {
        let r = 0.5 * dis.size;
        match dis.shape {
            ShapeKind::Box => b.oriented_box(&Transform::from_translation(dis.position), Vec3::new(r, r, r), &dis.color),
            ShapeKind::Sphere => b.sphere(dis.position, r, &dis.color),
            ShapeKind::Cylinder => b.cylinder(dis.position - Vec3::new(0.0, 0.0, r), r, dis.size, &dis.color),
        }
    }

    RenderList {
        triangles: b.tris,
        table: Some((scene.table_texture.clone(), TABLE)),
        background: scene.background_texture.clone(),
        intensity: scene.light.intensity,
        shadow_direction: scene.shadows_enabled.then_some(light),
    }
}
