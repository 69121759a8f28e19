use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use randgrasp::dataset::{generate, read_dataset, Dataset};
use randgrasp::mathkin::ArmModel;
use randgrasp::net::{
    dataset_loss, load_checkpoint, save_checkpoint, train, train_on, Checkpoint, Chunk, ControllerNet, NetConfig,
    NetError, StreamState, TrainConfig, HEAD_DIM,
};
use randgrasp::seed::{derive_seed, Stream};
use randgrasp::scene::RandomisationConfig;

struct Fixture {
    _dir: tempfile::TempDir,
    path: PathBuf,
    data: Dataset,
}

fn toy() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.rgds");
        generate(&RandomisationConfig::default(), 20, 2, 77, &path).unwrap();
        let data = read_dataset(&path).unwrap();
        Fixture { _dir: dir, path, data }
    })
}

fn quick(updates: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 4,
        max_updates: Some(updates),
        learning_rate: 1e-3,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn short_run_lowers_smoothed_loss() {
    let f = toy();
    let arm = ArmModel::reference();
    let cfg = quick(50);
    let out = train_on(&f.data, &arm, &NetConfig::desk(), &cfg, |_, _| {}).unwrap();
    assert_eq!(out.curve.len(), 50);
    for l in &out.curve {
        assert_eq!(l.total, l.l_v + l.l_g + l.l_gp + l.l_cp);
    }
    // whole-dataset loss of the initial and the trained parameters
    let untrained = ControllerNet::new(NetConfig::desk(), derive_seed(cfg.seed, Stream::NetInit, 0)).unwrap();
    let before = dataset_loss(&untrained, &out.normalization, &f.data, &out.class_weights, 8).unwrap();
    let after = dataset_loss(&out.net, &out.normalization, &f.data, &out.class_weights, 8).unwrap();
    assert!(after.total < before.total, "{} -> {}", before.total, after.total);
}

#[test]
fn same_seed_gives_identical_checkpoint_bytes() {
    let f = toy();
    let run = || Checkpoint::from(&train(&f.path, &NetConfig::desk(), &quick(6)).unwrap()).to_bytes();
    let a = run();
    assert_eq!(a, run());
    let other = TrainConfig { seed: 6, ..quick(6) };
    let c = Checkpoint::from(&train(&f.path, &NetConfig::desk(), &other).unwrap()).to_bytes();
    assert_ne!(a, c);
}

#[test]
fn checkpoint_round_trip_and_damage_detection() {
    let f = toy();
    let out = train(&f.path, &NetConfig::desk(), &quick(3)).unwrap();
    let ck = Checkpoint::from(&out);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rgck");
    save_checkpoint(&ck, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.net().unwrap().params, out.net.params);

    let bytes = std::fs::read(&path).unwrap();
    for cut in [0, 7, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(NetError::CorruptCheckpoint(_))), "cut {cut}");
    }
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 3] ^= 0x10;
    assert!(Checkpoint::from_bytes(&flipped).is_err());
}

#[test]
fn single_episode_is_memorised() {
    let f = toy();
    let one = Dataset {
        header: f.data.header,
        episodes: vec![f.data.episodes[0].clone()],
    };
    let cfg = TrainConfig {
        batch_size: 1,
        learning_rate: 1e-3,
        epochs: usize::MAX,
        max_updates: Some(2000),
        seed: 1,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let out = train_on(&one, &ArmModel::reference(), &NetConfig::desk(), &cfg, |_, _| {}).unwrap();
    eprintln!("2000 updates in {:?}", start.elapsed());

    // replay the padded episode as one stream and compare velocities in rad/s
    let net = &out.net;
    let norm = &out.normalization;
    let steps = &one.episodes[0].steps;
    let pad = net.config.window - 1;
    let n = steps.len() + pad;
    let res = net.config.input_resolution;
    let plane = res * res;
    let mut images = vec![0.0; 3 * n * plane];
    let mut joints = Vec::new();
    let mut buf = vec![0.0; 3 * plane];
    for t in 0..n {
        let s = &steps[t.saturating_sub(pad)];
        randgrasp::net::image_to_input(&s.image, res, &mut buf).unwrap();
        for c in 0..3 {
            images[(c * n + t) * plane..][..plane].copy_from_slice(&buf[c * plane..(c + 1) * plane]);
        }
        joints.extend_from_slice(&norm.joints(&s.joint_angles));
    }
    let mut reset = vec![false; n];
    reset[0] = true;
    let chunk = Chunk {
        streams: 1,
        steps: n,
        images: &images,
        joints: &joints,
        reset: &reset,
    };
    let (y, _) = net.forward_chunk(&chunk, &mut StreamState::zeros(&net.config, 1)).unwrap();
    let mut se = 0.0;
    for (k, s) in steps.iter().enumerate() {
        let row: [f64; 6] = y[(pad + k) * HEAD_DIM..][..6].try_into().unwrap();
        let v = norm.velocities(&row);
        se += v.iter().zip(&s.motor_velocities).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    let mse = se / (6 * steps.len()) as f64;
    eprintln!("velocity mse {mse}, final loss {:?}", out.curve.last());
    assert!(mse < 1e-3, "velocity mse {mse}");
}
