use proptest::prelude::*;
use randgrasp::control::{GripperAction, StageId};
use randgrasp::dataset::{
    dataset_stats, generate, generate_with, read_dataset, write_dataset, DatasetError, EpisodeRecord,
    GenerateOptions, StepRecord,
};
use randgrasp::mathkin::Vec3;
use randgrasp::render::Image;
use randgrasp::scene::{Basket, RandomisationConfig, Rect};

fn small_cfg(res: u32) -> RandomisationConfig {
    let mut c = RandomisationConfig::default();
    c.resolution = res;
    c
}

fn basket() -> Basket {
    Basket {
        position: Vec3::new(0.3, 0.4, 0.0),
        half_extents: [0.08, 0.08],
        depth: 0.08,
        wall: 0.01,
        color: [0.1, 0.2, 0.3],
    }
}

fn synthetic_episode(len: usize, w: u32, h: u32, salt: u64) -> EpisodeRecord {
    let steps = (0..len)
        .map(|k| {
            let x = (k as f64 + salt as f64) * 0.01;
            let stage = StageId::from_index((k * 5 / len).min(4)).unwrap();
            StepRecord {
                image: Image::from_pixels(w, h, (0..w * h * 3).map(|i| (i as u64 * 7 + k as u64 + salt) as u8).collect()).unwrap(),
                joint_angles: [x, -x, 0.5 * x, 1.0, 0.0, x * x],
                motor_velocities: [x.sin(), x.cos(), 0.1, -0.2, x, 0.0],
                gripper_action: match stage {
                    StageId::CloseGripper => GripperAction::Close,
                    StageId::Release => GripperAction::Open,
                    _ => GripperAction::NoOp,
                },
                cube_position: Vec3::new(0.4, x, 0.025),
                gripper_position: Vec3::new(x, 0.1, 0.3),
                stage_id: stage,
            }
        })
        .collect();
    EpisodeRecord {
        steps,
        scene_seed: 1000 + salt,
        attempt: salt,
        success: true,
        final_cube_position: Vec3::new(0.3, 0.4, 0.035),
        basket: basket(),
    }
}

#[test]
fn ten_episodes_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.rgds");
    let eps: Vec<_> = (0..10).map(|i| synthetic_episode(5 + i, 8, 6, i as u64)).collect();
    let summary = write_dataset(eps.clone(), &path, 77).unwrap();
    assert_eq!(summary.episodes, 10);
    assert_eq!(summary.steps, eps.iter().map(|e| e.steps.len() as u64).sum::<u64>());
    let back = read_dataset(&path).unwrap();
    assert_eq!(back.header.config_hash, 77);
    assert_eq!((back.header.width, back.header.height), (8, 6));
    assert_eq!(back.episodes, eps);
}

#[test]
fn truncation_and_corruption_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.rgds");
    write_dataset((0..3).map(|i| synthetic_episode(4, 4, 4, i)), &path, 1).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(read_dataset(&path), Err(DatasetError::CorruptDataset(_))));
    let mut flipped = bytes.clone();
    flipped[200] ^= 1;
    std::fs::write(&path, &flipped).unwrap();
    assert!(matches!(read_dataset(&path), Err(DatasetError::CorruptDataset(_))));
    std::fs::write(&path, &bytes[..10]).unwrap();
    assert!(matches!(read_dataset(&path), Err(DatasetError::CorruptDataset(_))));
}

#[test]
fn unsuccessful_episode_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = synthetic_episode(4, 4, 4, 0);
    e.success = false;
    let err = write_dataset(vec![e], &dir.path().join("d.rgds"), 0).unwrap_err();
    assert!(matches!(err, DatasetError::InvariantViolation(_)));
    assert!(!dir.path().join("d.rgds").exists());
}

#[test]
fn million_step_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.rgds");
    let ep = synthetic_episode(250, 1, 1, 3);
    let s = write_dataset(std::iter::repeat_n(ep, 4000), &path, 0).unwrap();
    assert_eq!(s.steps, 1_000_000);
    let stats = dataset_stats(&path).unwrap();
    assert_eq!(stats.steps, 1_000_000);
    assert_eq!(stats.length_histogram.get(&250), Some(&4000));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn random_small_episodes_round_trip(lens in proptest::collection::vec(1usize..12, 1..6), w in 1u32..5, h in 1u32..5, salt in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.rgds");
        let eps: Vec<_> = lens.iter().enumerate().map(|(i, &l)| synthetic_episode(l, w, h, salt.wrapping_add(i as u64) % 1_000_000)).collect();
        write_dataset(eps.clone(), &path, salt).unwrap();
        let back = read_dataset(&path).unwrap();
        prop_assert_eq!(back.episodes, eps);
        prop_assert_eq!(back.header.config_hash, salt);
    }
}

#[test]
fn worker_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(16);
    let a = dir.path().join("a.rgds");
    let b = dir.path().join("b.rgds");
    generate(&cfg, 6, 1, 99, &a).unwrap();
    generate(&cfg, 6, 8, 99, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn generated_episodes_replay_containment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.rgds");
    let cfg = small_cfg(64);
    let t = std::time::Instant::now();
    let s = generate(&cfg, 100, 2, 5, &path).unwrap();
    eprintln!("100 episodes, {} steps in {:.1?}", s.steps, t.elapsed());
    let data = read_dataset(&path).unwrap();
    assert_eq!(data.episodes.len(), 100);
    assert_eq!(data.header.config_hash, cfg.hash());
    for e in &data.episodes {
        assert!(e.success && e.contained());
        assert_eq!((e.steps[0].image.width, e.steps[0].image.height), (cfg.resolution, cfg.resolution));
        assert!(e.steps.windows(2).all(|w| w[0].stage_id <= w[1].stage_id));
    }
    let stats = dataset_stats(&path).unwrap();
    let per_stage = randgrasp::control::ScriptParams::default().gripper_frames as u64;
    assert_eq!(stats.action_counts[GripperAction::Close.index()], 100 * per_stage);
    assert_eq!(stats.action_counts[GripperAction::Open.index()], 100 * per_stage);
    // independent two-pass recomputation of the velocity moments
    let vs: Vec<[f64; 6]> = data.episodes.iter().flat_map(|e| e.steps.iter().map(|s| s.motor_velocities)).collect();
    let n = vs.len() as f64;
    for d in 0..6 {
        let mean = vs.iter().map(|v| v[d]).sum::<f64>() / n;
        let var = vs.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n;
        assert!((stats.velocity.mean[d] - mean).abs() < 1e-9);
        assert!((stats.velocity.std[d] - var.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn single_episode_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.rgds");
    write_dataset(vec![synthetic_episode(17, 2, 2, 0)], &path, 0).unwrap();
    let stats = dataset_stats(&path).unwrap();
    assert_eq!(stats.length_histogram.into_iter().collect::<Vec<_>>(), vec![(17, 1)]);
}

#[test]
fn unreachable_cube_region_stalls_and_saves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.rgds");
    let mut cfg = small_cfg(8);
    cfg.cube_region = Rect { x: [1.6, 1.7], y: [-0.1, 0.1] };
    cfg.distractor_count_range = [0, 0];
    let err = generate_with(&cfg, 50, 1, 3, &path, &GenerateOptions::default(), |_| {}).unwrap_err();
    assert!(matches!(err, DatasetError::GenerationStalled { .. }), "{err}");
    assert!(!path.exists());
}
