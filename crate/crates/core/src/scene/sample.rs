use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ColorDist, RandomisationConfig, Rect, SidePolicy};
use super::texture::{synthesize_texture, TextureMap};
use super::{Basket, CameraSpec, Color, Cube, Distractor, Light, Scene, ShapeKind, Side};
use crate::mathkin::{look_at, ArmModel, Joints, Vec3, DOF};

const PLACEMENT_ATTEMPTS: u32 = 100;
const FOOTPRINT_MARGIN: f64 = 0.02;
const BASE_KEEPOUT: f64 = 0.15;
const PLAIN_TEXTURE_RES: u32 = 16;

fn normal(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        // still consume a draw so every other quantity keeps its stream position
        let _: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
        return mean;
    }
    Normal::new(mean, std).expect("finite stddev").sample(rng)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn color(rng: &mut ChaCha8Rng, d: &ColorDist) -> Color {
    let mut c = [0.0; 3];
    for i in 0..3 {
        c[i] = normal(rng, d.mean[i], d.stddev[i]).clamp(0.0, 1.0);
    }
    c
}

fn point_in(rng: &mut ChaCha8Rng, r: &Rect) -> (f64, f64) {
    (uniform(rng, r.x[0], r.x[1]), uniform(rng, r.y[0], r.y[1]))
}

fn camera(cfg: &RandomisationConfig, jitter: [f64; 3]) -> CameraSpec {
    let canonical = Vec3::from(cfg.camera_eye);
    let target = Vec3::from(cfg.camera_target);
    let mut pose = look_at(&canonical, &target, &Vec3::z());
    if cfg.switches.camera_jitter {
        // orientation stays canonical, only the position moves
        pose.translation += Vec3::from(jitter);
    }
    CameraSpec {
        pose,
        fov_y: cfg.fov_y_deg.to_radians(),
        width: cfg.resolution,
        height: cfg.resolution,
    }
}

fn basket(cfg: &RandomisationConfig, x: f64, y: f64, color: Color) -> Basket {
    Basket {
        position: Vec3::new(x, y, 0.0),
        half_extents: cfg.basket_half_extents,
        depth: cfg.basket_depth,
        wall: cfg.basket_wall,
        color,
    }
}

fn light_direction(cfg: &RandomisationConfig, cos_theta: f64, phi: f64) -> Vec3 {
    let axis = Vec3::from(cfg.light_direction).normalize();
    if cos_theta >= 1.0 {
        return axis;
    }
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    (axis * cos_theta + (u * phi.cos() + v * phi.sin()) * sin_theta).normalize()
}

fn footprint_clear(x: f64, y: f64, half: f64, scene_cube: &Cube, basket: &Basket, placed: &[Distractor]) -> bool {
    let cube_half = scene_cube.half() + FOOTPRINT_MARGIN;
    if (x - scene_cube.position.x).abs() < half + cube_half
        && (y - scene_cube.position.y).abs() < half + cube_half
    {
        return false;
    }
    let bx = basket.half_extents[0] + basket.wall + FOOTPRINT_MARGIN;
    let by = basket.half_extents[1] + basket.wall + FOOTPRINT_MARGIN;
    if (x - basket.position.x).abs() < half + bx && (y - basket.position.y).abs() < half + by {
        return false;
    }
    if (x * x + y * y).sqrt() < BASE_KEEPOUT + half {
        return false;
    }
    placed.iter().all(|d| {
        let h = 0.5 * d.size;
        (x - d.position.x).abs() >= half + h || (y - d.position.y).abs() >= half + h
    })
}

/// Draws a full scene. Every random quantity is drawn in a fixed order whether
/// or not its switch is on, so toggling one switch never shifts the others.
pub fn sample_scene(cfg: &RandomisationConfig, rng_seed: u64) -> Scene {
    sample_scene_with(cfg, rng_seed, None)
}

/// As [`sample_scene`], optionally pinning the cube centre and basket side
/// (used by the evaluation grid).
pub fn sample_scene_with(
    cfg: &RandomisationConfig,
    rng_seed: u64,
    pinned: Option<((f64, f64), Side)>,
) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let cube_color = color(&mut rng, &cfg.cube_color);
    let basket_color = color(&mut rng, &cfg.basket_color);
    let arm_color = color(&mut rng, &cfg.arm_color);

    let (mut cx, mut cy) = point_in(&mut rng, &cfg.cube_region);
    let coin: bool = rng.random();
    let mut side = match cfg.basket_side {
        SidePolicy::Random => {
            if coin {
                Side::Left
            } else {
                Side::Right
            }
        }
        SidePolicy::Left => Side::Left,
        SidePolicy::Right => Side::Right,
    };
    let (bu, bv): (f64, f64) = (rng.random(), rng.random());
    if let Some(((px, py), s)) = pinned {
        cx = px;
        cy = py;
        side = s;
    }
    let region = match side {
        Side::Left => &cfg.basket_left_region,
        Side::Right => &cfg.basket_right_region,
    };
    let bx = region.x[0] + (region.x[1] - region.x[0]) * bu;
    let by = region.y[0] + (region.y[1] - region.y[0]) * bv;

    let mut jitter = [0.0; 3];
    for (j, b) in jitter.iter_mut().zip(cfg.camera_position_box.iter()) {
        *j = uniform(&mut rng, -0.5 * b, 0.5 * b);
    }

    let cos_max = cfg.light_cone_half_angle_deg.to_radians().cos();
    let cos_theta = uniform(&mut rng, cos_max, 1.0);
    let phi = uniform(&mut rng, 0.0, std::f64::consts::TAU);
    let intensity = cfg.light_intensity
        * (1.0 + uniform(&mut rng, -cfg.light_intensity_jitter, cfg.light_intensity_jitter));

    let base_height = uniform(
        &mut rng,
        cfg.base_height - cfg.base_height_range,
        cfg.base_height + cfg.base_height_range,
    );

    let arm = ArmModel::reference();
    let home = arm.home();
    let mut start_joints: Joints = [0.0; DOF];
    for i in 0..DOF {
        start_joints[i] = normal(&mut rng, home[i], cfg.start_joint_stddev);
    }
    arm.clamp(&mut start_joints);

    let table_seed: u64 = rng.random();
    let background_seed: u64 = rng.random();
    let table_plain = color(&mut rng, &cfg.table_color);
    let background_plain = color(&mut rng, &cfg.background_color);
    let (table_texture, background_texture) = if cfg.switches.textures {
        let res = cfg.texture_params.resolution;
        (
            synthesize_texture(&cfg.texture_params, table_seed, res),
            synthesize_texture(&cfg.texture_params, background_seed, res),
        )
    } else {
        (
            TextureMap::solid(table_plain, PLAIN_TEXTURE_RES),
            TextureMap::solid(background_plain, PLAIN_TEXTURE_RES),
        )
    };

    let cube = Cube {
        position: Vec3::new(cx, cy, 0.5 * cfg.cube_edge),
        edge: cfg.cube_edge,
        color: cube_color,
    };
    let basket = basket(cfg, bx, by, basket_color);

    let [lo, hi] = cfg.distractor_count_range;
    let count = rng.random_range(lo..=hi);
    let mut distractors = Vec::new();
    let mut placement_failures = 0;
    for _ in 0..count {
        let shape = match rng.random_range(0..3u32) {
            0 => ShapeKind::Box,
            1 => ShapeKind::Sphere,
            _ => ShapeKind::Cylinder,
        };
        let size = uniform(&mut rng, cfg.distractor_size_range[0], cfg.distractor_size_range[1]);
        let dcolor = [rng.random(), rng.random(), rng.random()];
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (x, y) = point_in(&mut rng, &cfg.distractor_region);
            if footprint_clear(x, y, 0.5 * size, &cube, &basket, &distractors) {
                placed = Some((x, y));
                break;
            }
        }
        match placed {
            Some((x, y)) if cfg.switches.distractors => distractors.push(Distractor {
                shape,
                position: Vec3::new(x, y, 0.5 * size),
                size,
                color: dcolor,
            }),
            Some(_) => {}
            None => placement_failures += 1,
        }
    }

    Scene {
        cube,
        basket,
        basket_side: side,
        arm_base_height: base_height,
        arm_color,
        start_joints,
        camera: camera(cfg, jitter),
        light: Light {
            direction: light_direction(cfg, cos_theta, phi),
            intensity,
        },
        distractors,
        table_texture,
        background_texture,
        shadows_enabled: cfg.switches.shadows,
        placement_failures,
    }
}

/// Scene at the centre of every distribution: mean colours, region centres,
/// canonical camera and light, home joints, no distractors, plain surfaces.
pub fn mean_scene(cfg: &RandomisationConfig, side: Side) -> Scene {
    let (cx, cy) = cfg.cube_region.center();
    let region = match side {
        Side::Left => &cfg.basket_left_region,
        Side::Right => &cfg.basket_right_region,
    };
    let (bx, by) = region.center();
    let mut no_jitter = cfg.clone();
    no_jitter.switches.camera_jitter = false;
    Scene {
        cube: Cube {
            position: Vec3::new(cx, cy, 0.5 * cfg.cube_edge),
            edge: cfg.cube_edge,
            color: cfg.cube_color.mean,
        },
        basket: basket(cfg, bx, by, cfg.basket_color.mean),
        basket_side: side,
        arm_base_height: cfg.base_height,
        arm_color: cfg.arm_color.mean,
        start_joints: ArmModel::reference().home(),
        camera: camera(&no_jitter, [0.0; 3]),
        light: Light {
            direction: Vec3::from(cfg.light_direction).normalize(),
            intensity: cfg.light_intensity,
        },
        distractors: Vec::new(),
        table_texture: TextureMap::solid(cfg.table_color.mean, PLAIN_TEXTURE_RES),
        background_texture: TextureMap::solid(cfg.background_color.mean, PLAIN_TEXTURE_RES),
        shadows_enabled: cfg.switches.shadows,
        placement_failures: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::apply_ablation;

    fn cfg() -> RandomisationConfig {
        RandomisationConfig::default()
    }

    /// Plain surfaces keep the large statistical sweeps fast; textures draw
    /// their seeds either way so nothing else shifts.
    fn fast() -> RandomisationConfig {
        let mut c = cfg();
        c.switches.textures = false;
        c
    }

    #[test]
    fn same_seed_same_scene() {
        let c = cfg();
        for seed in [0u64, 1, 99, u64::MAX] {
            assert_eq!(sample_scene(&c, seed).to_bytes(), sample_scene(&c, seed).to_bytes());
        }
        assert_ne!(sample_scene(&c, 1).to_bytes(), sample_scene(&c, 2).to_bytes());
    }

    #[test]
    fn cube_position_is_uniform_over_region() {
        // 4x4 chi-square over 10,000 samples; 15 dof, p = 0.01 critical value 30.58
        let c = fast();
        let n = 10_000;
        let mut bins = [0u32; 16];
        for s in 0..n {
            let sc = sample_scene(&c, s);
            let (x, y) = (sc.cube.position.x, sc.cube.position.y);
            assert!(c.cube_region.contains(x, y));
            let i = (((x - c.cube_region.x[0]) / (c.cube_region.x[1] - c.cube_region.x[0])) * 4.0) as usize;
            let j = (((y - c.cube_region.y[0]) / (c.cube_region.y[1] - c.cube_region.y[0])) * 4.0) as usize;
            bins[i.min(3) * 4 + j.min(3)] += 1;
        }
        let e = n as f64 / 16.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 30.58, "chi2 = {chi2}");
    }

    #[test]
    fn degenerate_config_gives_mean_scene() {
        let mut c = cfg();
        for d in [&mut c.cube_color, &mut c.basket_color, &mut c.arm_color, &mut c.table_color, &mut c.background_color] {
            d.stddev = [0.0; 3];
        }
        let (cx, cy) = c.cube_region.center();
        c.cube_region = Rect { x: [cx, cx], y: [cy, cy] };
        let (bx, by) = c.basket_left_region.center();
        c.basket_left_region = Rect { x: [bx, bx], y: [by, by] };
        c.basket_side = SidePolicy::Left;
        c.camera_position_box = [0.0; 3];
        c.light_cone_half_angle_deg = 0.0;
        c.light_intensity_jitter = 0.0;
        c.base_height_range = 0.0;
        c.start_joint_stddev = 0.0;
        c.distractor_count_range = [0, 0];
        c.switches.textures = false;
        let mean = mean_scene(&c, Side::Left);
        for s in 0..5 {
            let got = sample_scene(&c, s);
            assert_eq!(String::from_utf8(got.to_bytes()).unwrap(), String::from_utf8(mean.to_bytes()).unwrap());
        }
    }

    #[test]
    fn orientations_stay_canonical() {
        let c = fast();
        let r0 = sample_scene(&c, 0).camera.pose.rotation;
        for s in 1..200 {
            let sc = sample_scene(&c, s);
            assert_eq!(sc.camera.pose.rotation, r0);
        }
    }

    #[test]
    fn basket_sides_are_balanced_and_in_region() {
        let c = fast();
        let mut left = 0;
        let n = 4000;
        for s in 0..n {
            let sc = sample_scene(&c, s);
            let r = match sc.basket_side {
                Side::Left => {
                    left += 1;
                    &c.basket_left_region
                }
                Side::Right => &c.basket_right_region,
            };
            assert!(r.contains(sc.basket.position.x, sc.basket.position.y));
        }
        // binomial sd = sqrt(n)/2 ~ 31.6; allow 4 sd
        assert!((left as f64 - n as f64 / 2.0).abs() < 4.0 * 31.7, "left = {left}");
    }

    fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let skew = xs.iter().map(|x| ((x - m) / sd).powi(3)).sum::<f64>() / n;
        let kurt = xs.iter().map(|x| ((x - m) / sd).powi(4)).sum::<f64>() / n - 3.0;
        (m, sd, skew, kurt)
    }

    #[test]
    fn start_joints_are_normal_around_home() {
        let mut c = fast();
        c.start_joint_stddev = 0.05;
        let home = ArmModel::reference().home();
        let xs: Vec<f64> = (0..20_000).map(|s| sample_scene(&c, s).start_joints[0] - home[0]).collect();
        let (m, sd, skew, kurt) = moments(&xs);
        assert!(m.abs() < 0.002, "mean {m}");
        assert!((sd - 0.05).abs() < 0.002, "sd {sd}");
        assert!(skew.abs() < 0.1, "skew {skew}");
        assert!(kurt.abs() < 0.2, "kurtosis {kurt}");
    }

    #[test]
    fn colours_are_clamped_normal() {
        let c = fast();
        let xs: Vec<f64> = (0..20_000).map(|s| sample_scene(&c, s).cube.color[1]).collect();
        assert!(xs.iter().all(|v| (0.0..=1.0).contains(v)));
        let (m, sd, skew, _) = moments(&xs);
        assert!((m - c.cube_color.mean[1]).abs() < 0.002);
        assert!((sd - c.cube_color.stddev[1]).abs() < 0.002);
        assert!(skew.abs() < 0.1);
    }

    #[test]
    fn light_stays_inside_cone() {
        let c = fast();
        let axis = Vec3::from(c.light_direction).normalize();
        let cos_max = c.light_cone_half_angle_deg.to_radians().cos();
        for s in 0..2000 {
            let l = sample_scene(&c, s).light;
            assert!((l.direction.norm() - 1.0).abs() < 1e-12);
            assert!(l.direction.dot(&axis) >= cos_max - 1e-12);
            let j = c.light_intensity_jitter;
            assert!(l.intensity >= c.light_intensity * (1.0 - j) && l.intensity <= c.light_intensity * (1.0 + j));
        }
    }

    #[test]
    fn distractors_never_overlap_cube_or_basket() {
        let c = fast();
        let mut total = 0;
        for s in 0..10_000 {
            let sc = sample_scene(&c, s);
            let n = sc.distractors.len() as u32 + sc.placement_failures;
            assert!(n >= c.distractor_count_range[0] && n <= c.distractor_count_range[1]);
            for d in &sc.distractors {
                total += 1;
                let h = 0.5 * d.size;
                let ch = sc.cube.half();
                assert!(
                    (d.position.x - sc.cube.position.x).abs() >= h + ch
                        || (d.position.y - sc.cube.position.y).abs() >= h + ch
                );
                let b = &sc.basket;
                assert!(
                    (d.position.x - b.position.x).abs() >= h + b.half_extents[0] + b.wall
                        || (d.position.y - b.position.y).abs() >= h + b.half_extents[1] + b.wall
                );
                assert!(c.distractor_region.contains(d.position.x, d.position.y));
            }
        }
        assert!(total > 10_000);
    }

    #[test]
    fn switches_change_only_their_aspect() {
        let c = cfg();
        for s in 0..50 {
            let full = sample_scene(&c, s);
            let nd = sample_scene(&apply_ablation(&c, "no_distractors").unwrap(), s);
            assert!(nd.distractors.is_empty());
            assert_eq!(nd.cube, full.cube);
            assert_eq!(nd.camera, full.camera);
            let nt = sample_scene(&apply_ablation(&c, "no_textures").unwrap(), s);
            assert!(nt.table_texture.is_uniform() && nt.background_texture.is_uniform());
            assert_eq!(nt.distractors, full.distractors);
            let nc = sample_scene(&apply_ablation(&c, "no_moving_cam").unwrap(), s);
            assert_eq!(nc.camera, mean_scene(&c, Side::Left).camera);
            assert_eq!(nc.light, full.light);
            let ns = sample_scene(&apply_ablation(&c, "no_shadows").unwrap(), s);
            assert!(!ns.shadows_enabled && full.shadows_enabled);
        }
    }

    #[test]
    fn baseline_has_no_variation() {
        let c = apply_ablation(&cfg(), "baseline").unwrap();
        let a = sample_scene(&c, 3);
        let b = sample_scene(&c, 4);
        assert_eq!(a.cube.color, b.cube.color);
        assert_eq!(a.camera, b.camera);
        assert_eq!(a.light, b.light);
        assert_eq!(a.start_joints, b.start_joints);
        assert!(a.distractors.is_empty());
        assert!(a.table_texture.is_uniform());
    }

    #[test]
    fn pinned_placement_is_honoured() {
        let c = cfg();
        let sc = sample_scene_with(&c, 5, Some(((0.4, 0.05), Side::Right)));
        assert_eq!((sc.cube.position.x, sc.cube.position.y), (0.4, 0.05));
        assert_eq!(sc.basket_side, Side::Right);
        assert!(c.basket_right_region.contains(sc.basket.position.x, sc.basket.position.y));
    }
}
