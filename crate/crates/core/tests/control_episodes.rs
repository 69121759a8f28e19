use randgrasp::control::{
    run_scripted, EpisodeRecorder, Frame, GripperAction, ScriptParams, StageId, World,
};
use randgrasp::mathkin::{ArmModel, Transform};
use randgrasp::scene::{sample_scene, RandomisationConfig};

fn plain_cfg() -> RandomisationConfig {
    let mut c = RandomisationConfig::default();
    c.switches.textures = false;
    c
}

/// Stores frames and the cube-in-tip pose seen at each attached step.
#[derive(Default)]
struct Probe {
    frames: Vec<Frame>,
    offsets: Vec<Transform>,
}

impl EpisodeRecorder for Probe {
    fn record(&mut self, frame: &Frame, world: &World) {
        self.frames.push(frame.clone());
        if world.is_attached() {
            self.offsets.push(world.tip().inverse().compose(&world.cube));
        }
    }
}

#[test]
fn scripted_demonstrator_succeeds_on_random_scenes() {
    let cfg = plain_cfg();
    let model = ArmModel::reference();
    let params = ScriptParams::default();
    let mut ok = 0;
    let n = 200;
    let mut lengths = Vec::new();
    for s in 0..n {
        let scene = sample_scene(&cfg, s);
        match run_scripted(&scene, &model, &params, &mut Vec::new()) {
            Ok(o) if o.success => {
                ok += 1;
                lengths.push(o.steps);
            }
            Ok(o) => eprintln!("seed {s}: not contained, cube at {:?}", o.final_cube_position),
            Err(e) => eprintln!("seed {s}: {e}"),
        }
    }
    let mean = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64;
    eprintln!("success {ok}/{n}, mean steps {mean:.1}");
    assert!(ok as f64 >= 0.98 * n as f64, "{ok}/{n}");
}

#[test]
fn episode_invariants_hold() {
    let cfg = plain_cfg();
    let model = ArmModel::reference();
    let params = ScriptParams::default();
    for s in 0..30 {
        let scene = sample_scene(&cfg, s);
        let mut probe = Probe::default();
        let Ok(out) = run_scripted(&scene, &model, &params, &mut probe) else { continue };
        if !out.success {
            continue;
        }
        let stages: Vec<StageId> = probe.frames.iter().map(|f| f.stage).collect();
        assert!(stages.windows(2).all(|w| w[0] <= w[1]), "stages go backwards");
        for id in StageId::ALL {
            assert!(stages.contains(&id), "{id:?} missing");
        }
        for f in &probe.frames {
            let expect = match f.stage {
                StageId::CloseGripper => GripperAction::Close,
                StageId::Release => GripperAction::Open,
                _ => GripperAction::NoOp,
            };
            assert_eq!(f.action, expect);
        }
        let first = &probe.offsets[0];
        for o in &probe.offsets {
            assert!((o.translation - first.translation).norm() < 1e-9);
            assert!((o.rotation - first.rotation).norm() < 1e-9);
        }
        assert_eq!(out.stage_steps[1], params.gripper_frames);
        assert_eq!(out.stage_steps[4], params.gripper_frames);
    }
}

#[test]
fn cube_under_positioned_gripper_is_delivered() {
    let cfg = plain_cfg();
    let model = ArmModel::reference();
    let mut scene = sample_scene(&cfg, 7);
    let arm = model.with_base_height(scene.arm_base_height);
    let tip = arm.forward_kinematics(&scene.start_joints).translation;
    scene.cube.position = randgrasp::mathkin::Vec3::new(tip.x, tip.y, scene.cube.half());
    let mut frames = Vec::new();
    let out = run_scripted(&scene, &model, &ScriptParams::default(), &mut frames).unwrap();
    assert!(out.success && out.grasped);
    let mut segments: Vec<StageId> = frames.iter().map(|f| f.stage).collect();
    segments.dedup();
    assert_eq!(segments, StageId::ALL.to_vec());
}

#[test]
fn unreachable_cube_is_a_planning_failure() {
    let cfg = plain_cfg();
    let model = ArmModel::reference();
    let mut scene = sample_scene(&cfg, 3);
    scene.cube.position.x = 2.0;
    assert!(run_scripted(&scene, &model, &ScriptParams::default(), &mut Vec::new()).is_err());
}
