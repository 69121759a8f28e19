use randgrasp::mathkin::{look_at, ArmModel, Transform, Vec3};
use randgrasp::render::{
    build_render_list, overlay_marker, project_point, rasterize, render, render_initial, Camera, Image,
    RenderList, RenderState,
};
use randgrasp::scene::{mean_scene, sample_scene, to_u8, RandomisationConfig, Side, TextureMap};

fn camera(res: u32) -> Camera {
    let pose = look_at(&Vec3::new(0.95, -0.75, 0.95), &Vec3::new(0.25, 0.0, 0.2), &Vec3::z());
    Camera::new(pose, 55f64.to_radians(), res, res)
}

fn quiet_scene(res: u32) -> randgrasp::scene::Scene {
    let mut cfg = RandomisationConfig::default();
    cfg.resolution = res;
    cfg.switches.shadows = false;
    mean_scene(&cfg, Side::Left)
}

#[test]
fn empty_list_is_shaded_background() {
    let c = [0.3, 0.6, 0.9];
    let list = RenderList::empty(TextureMap::solid(c, 16), 0.8);
    let img = rasterize(&list, &camera(32));
    let bg = TextureMap::solid(c, 16).sample(0.0, 0.0);
    let expect = [to_u8(bg[0] * 0.8), to_u8(bg[1] * 0.8), to_u8(bg[2] * 0.8)];
    for y in 0..32 {
        for x in 0..32 {
            assert_eq!(img.get(x, y), expect);
        }
    }
}

fn differing(a: &Image, b: &Image) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for y in 0..a.height {
        for x in 0..a.width {
            if a.get(x, y) != b.get(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

#[test]
fn cube_centroid_matches_pinhole_projection() {
    let arm = ArmModel::reference();
    let scene = quiet_scene(128);
    let cam = camera(128);
    for (x, y) in [(0.45, 0.0), (0.3, 0.15), (0.6, -0.18)] {
        let cube = Transform::from_translation(Vec3::new(x, y, scene.cube.half()));
        let mut state = RenderState::initial(&scene);
        // arm folded away from the cube
        state.joints = [2.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        state.cube = cube;
        let with = render(&scene, &arm, &state, &cam);
        state.cube = Transform::from_translation(Vec3::new(50.0, 0.0, 0.0));
        let without = render(&scene, &arm, &state, &cam);
        let px = differing(&with, &without);
        assert!(px.len() > 20);
        let n = px.len() as f64;
        let cx = px.iter().map(|p| p.0 as f64 + 0.5).sum::<f64>() / n;
        let cy = px.iter().map(|p| p.1 as f64 + 0.5).sum::<f64>() / n;
        let (u, v, _) = project_point(&cam, &cube.translation).unwrap();
        assert!((cx - u).abs() <= 1.0 && (cy - v).abs() <= 1.0, "centroid ({cx}, {cy}) vs ({u}, {v})");
    }
}

#[test]
fn hidden_box_contributes_no_pixels() {
    let cam = camera(64);
    let light = Vec3::new(0.0, 0.0, -1.0);
    let toward_cam = (cam.pose.translation - Vec3::new(0.4, 0.0, 0.1)).normalize();
    let front = Transform::from_translation(Vec3::new(0.4, 0.0, 0.1) + toward_cam * 0.3);
    let back = Transform::from_translation(Vec3::new(0.4, 0.0, 0.1));
    let mut only_front = RenderList::empty(TextureMap::solid([0.5; 3], 16), 1.0);
    only_front.add_box(&front, Vec3::new(0.1, 0.1, 0.1), &[0.9, 0.1, 0.1], &light);
    let mut both = only_front.clone();
    both.add_box(&back, Vec3::new(0.02, 0.02, 0.02), &[0.1, 0.9, 0.1], &light);
    assert_eq!(rasterize(&both, &cam), rasterize(&only_front, &cam));
    // the small box is visible on its own
    let mut alone = RenderList::empty(TextureMap::solid([0.5; 3], 16), 1.0);
    alone.add_box(&back, Vec3::new(0.02, 0.02, 0.02), &[0.1, 0.9, 0.1], &light);
    assert!(!differing(&rasterize(&alone, &cam), &rasterize(&RenderList::empty(TextureMap::solid([0.5; 3], 16), 1.0), &cam)).is_empty());
}

#[test]
fn shadows_off_table_ignores_light_direction() {
    let arm = ArmModel::reference();
    let mut cfg = RandomisationConfig::default();
    cfg.switches.distractors = true;
    let mut scene = sample_scene(&cfg, 11);
    let cam = Camera::from_spec(&scene.camera);
    let state = RenderState::initial(&scene);
    for shadows in [false, true] {
        scene.shadows_enabled = shadows;
        let mut s2 = scene.clone();
        s2.light.direction = Vec3::new(0.4, -0.3, -1.0).normalize();
        let a = build_render_list(&scene, &arm, &state);
        let b = build_render_list(&s2, &arm, &state);
        let mut table_only = a.clone();
        table_only.triangles.clear();
        table_only.shadow_direction = None;
        let objects: std::collections::HashSet<_> =
            differing(&rasterize(&a, &cam), &rasterize(&table_only, &cam)).into_iter().collect();
        let changed = differing(&rasterize(&a, &cam), &rasterize(&b, &cam));
        let off_object = changed.iter().filter(|p| !objects.contains(p)).count();
        if shadows {
            assert!(off_object > 0, "shadows should move with the light");
        } else {
            assert_eq!(off_object, 0);
        }
    }
}

#[test]
fn render_is_deterministic_with_golden_hash() {
    let arm = ArmModel::reference();
    let cfg = RandomisationConfig::default();
    let scene = sample_scene(&cfg, 42);
    let a = render_initial(&scene, &arm);
    let b = render_initial(&scene, &arm);
    assert_eq!(a, b);
    assert_eq!((a.width, a.height), (cfg.resolution, cfg.resolution));
    assert_eq!(a.sha256_hex(), GOLDEN_SCENE_42);
    let m = render_initial(&mean_scene(&cfg, Side::Right), &arm);
    assert_eq!(m.sha256_hex(), GOLDEN_MEAN_RIGHT);
}

const GOLDEN_SCENE_42: &str = "ad4707c69750fdbe18b113b6f03a4ffef063a05adae0c57d66dec8438b3606b2";
const GOLDEN_MEAN_RIGHT: &str = "ca96148b778e72d40c2b96ad2e7969c0950a84994cf7f1d2c024534b29e5edcb";

#[test]
fn marker_overlay() {
    let scene = quiet_scene(64);
    let arm = ArmModel::reference();
    let cam = Camera::from_spec(&scene.camera);
    let img = render_initial(&scene, &arm);
    let behind = cam.pose.transform_point(&Vec3::new(0.0, 0.0, -1.0));
    assert_eq!(overlay_marker(&img, &cam, &behind, [255, 0, 255]), img);
    let p = scene.cube.position;
    let once = overlay_marker(&img, &cam, &p, [255, 0, 255]);
    assert_eq!(overlay_marker(&once, &cam, &p, [255, 0, 255]), once);
    let (u, v, _) = project_point(&cam, &p).unwrap();
    let (cx, cy) = (u.floor() as u32, v.floor() as u32);
    for d in 0..=2 {
        assert_eq!(once.get(cx + d, cy), [255, 0, 255]);
        assert_eq!(once.get(cx - d, cy), [255, 0, 255]);
        assert_eq!(once.get(cx, cy + d), [255, 0, 255]);
        assert_eq!(once.get(cx, cy - d), [255, 0, 255]);
    }
    assert_ne!(once.get(cx + 1, cy + 1), [255, 0, 255]);
}
