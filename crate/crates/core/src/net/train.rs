use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::config::{NetConfig, TrainConfig, JOINT_DIM};
use super::deploy::image_to_input;
use super::loss::{loss, LossBreakdown, Targets};
use super::model::{Cache, Chunk, ControllerNet, StreamState};
use super::NetError;
use crate::dataset::{read_dataset, stats_of, Dataset, DatasetStats, Moments, StepRecord};
use crate::mathkin::ArmModel;
use crate::seed::{derive_seed, Stream};

/// Input and target scaling stored alongside the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub velocity: Moments,
    pub cube: Moments,
    pub gripper: Moments,
    pub joint_limits: Vec<(f64, f64)>,
}

fn standardize(m: &Moments, x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = (x[i] - m.mean[i]) / m.std[i].max(1e-6);
    }
}

impl Normalization {
    pub fn from_stats(stats: &DatasetStats, arm: &ArmModel) -> Self {
        Self {
            velocity: stats.velocity.clone(),
            cube: stats.cube_position.clone(),
            gripper: stats.gripper_position.clone(),
            joint_limits: arm.joint_limits.to_vec(),
        }
    }

    /// Joint angles mapped to [-1, 1] by their limits.
    pub fn joints(&self, q: &[f64; JOINT_DIM]) -> [f64; JOINT_DIM] {
        let mut out = [0.0; JOINT_DIM];
        for i in 0..JOINT_DIM {
            let (lo, hi) = self.joint_limits[i];
            out[i] = 2.0 * (q[i] - lo) / (hi - lo) - 1.0;
        }
        out
    }

    /// Velocity head output back in rad/s.
    pub fn velocities(&self, out: &[f64; 6]) -> [f64; 6] {
        let mut v = [0.0; 6];
        for i in 0..6 {
            v[i] = out[i] * self.velocity.std[i].max(1e-6) + self.velocity.mean[i];
        }
        v
    }

    fn push_targets(&self, s: &StepRecord, t: &mut Targets) {
        let mut v = [0.0; 6];
        standardize(&self.velocity, &s.motor_velocities, &mut v);
        t.velocity.extend_from_slice(&v);
        let mut p = [0.0; 3];
        standardize(&self.cube, s.cube_position.as_slice(), &mut p);
        t.cube.extend_from_slice(&p);
        standardize(&self.gripper, s.gripper_position.as_slice(), &mut p);
        t.gripper.extend_from_slice(&p);
        t.action.push(s.gripper_action.index());
    }
}

/// Inverse-frequency class weights `N / (3 * count)`; absent classes get 1.
pub fn class_weights(counts: &[u64; 3]) -> [f64; 3] {
    let n: u64 = counts.iter().sum();
    let mut w = [1.0; 3];
    for k in 0..3 {
        if counts[k] > 0 {
            w[k] = n as f64 / (3.0 * counts[k] as f64);
        }
    }
    w
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: ControllerNet,
    pub normalization: Normalization,
    pub adam: AdamState,
    /// Loss of every optimizer update, in order.
    pub curve: Vec<LossBreakdown>,
    pub class_weights: [f64; 3],
}

/// Position of one training stream: episode and step, negative while in the padding prefix.
#[derive(Clone, Copy, Debug)]
struct Cursor {
    episode: usize,
    pos: isize,
}

/// Lays out `batch` parallel episode streams over `order`, `steps` at a time.
/// Every slot is `Some((episode, pos))` or `None` once the queue is drained.
pub fn episode_streams(
    lengths: &[usize],
    order: &[usize],
    batch: usize,
    steps: usize,
    pad: usize,
) -> Vec<Vec<Option<(usize, isize)>>> {
    let mut queue = order.iter().copied();
    let mut streams: Vec<Option<Cursor>> = (0..batch)
        .map(|_| queue.next().map(|e| Cursor { episode: e, pos: -(pad as isize) }))
        .collect();
    let mut chunks = Vec::new();
    while streams.iter().any(Option::is_some) {
        let mut chunk = Vec::with_capacity(batch * steps);
        for _ in 0..steps {
            for s in streams.iter_mut() {
                chunk.push(s.map(|c| (c.episode, c.pos)));
                if let Some(c) = s {
                    c.pos += 1;
                    if c.pos >= 0 && c.pos as usize >= lengths[c.episode] {
                        *s = queue.next().map(|e| Cursor { episode: e, pos: -(pad as isize) });
                    }
                }
            }
        }
        chunks.push(chunk);
    }
    chunks
}

/// Reusable input buffers for one `streams x steps` chunk.
struct ChunkBuilder {
    streams: usize,
    steps: usize,
    res: usize,
    pad: usize,
    images: Vec<f64>,
    frame: Vec<f64>,
    joints: Vec<f64>,
    reset: Vec<bool>,
    targets: Targets,
}

impl ChunkBuilder {
    fn new(cfg: &NetConfig, streams: usize, steps: usize) -> Self {
        let res = cfg.input_resolution;
        let n = streams * steps;
        Self {
            streams,
            steps,
            res,
            pad: cfg.window - 1,
            images: vec![0.0; 3 * n * res * res],
            frame: vec![0.0; 3 * res * res],
            joints: vec![0.0; n * JOINT_DIM],
            reset: vec![true; n],
            targets: Targets::default(),
        }
    }

    /// Loads the frames named by `slots`; empty slots become masked blank frames.
    fn fill(&mut self, data: &Dataset, norm: &Normalization, slots: &[Option<(usize, isize)>]) -> Result<(), NetError> {
        let n = self.streams * self.steps;
        let plane = self.res * self.res;
        self.images.fill(0.0);
        self.joints.fill(0.0);
        self.reset.fill(true);
        self.targets = Targets::default();
        let t = &mut self.targets;
        for (f, slot) in slots.iter().enumerate() {
            let Some((e, pos)) = *slot else {
                t.velocity.extend_from_slice(&[0.0; 6]);
                t.cube.extend_from_slice(&[0.0; 3]);
                t.gripper.extend_from_slice(&[0.0; 3]);
                t.action.push(0);
                t.mask.push(0.0);
                continue;
            };
            let step = &data.episodes[e].steps[pos.max(0) as usize];
            image_to_input(&step.image, self.res, &mut self.frame)?;
            for c in 0..3 {
                self.images[(c * n + f) * plane..][..plane].copy_from_slice(&self.frame[c * plane..(c + 1) * plane]);
            }
            self.joints[f * JOINT_DIM..(f + 1) * JOINT_DIM].copy_from_slice(&norm.joints(&step.joint_angles));
            self.reset[f] = pos == -(self.pad as isize);
            norm.push_targets(step, t);
            t.mask.push(if pos >= 0 { 1.0 } else { 0.0 });
        }
        Ok(())
    }

    fn chunk(&self) -> Chunk<'_> {
        Chunk {
            streams: self.streams,
            steps: self.steps,
            images: &self.images,
            joints: &self.joints,
            reset: &self.reset,
        }
    }
}

/// Frame-weighted mean loss of `net` over every episode of `data`, streamed in order.
pub fn dataset_loss(
    net: &ControllerNet,
    norm: &Normalization,
    data: &Dataset,
    class_weights: &[f64; 3],
    streams: usize,
) -> Result<LossBreakdown, NetError> {
    let lengths: Vec<usize> = data.episodes.iter().map(|e| e.steps.len()).collect();
    let order: Vec<usize> = (0..lengths.len()).collect();
    let steps = 16;
    let mut builder = ChunkBuilder::new(&net.config, streams, steps);
    let mut state = StreamState::zeros(&net.config, streams);
    let mut cache = Cache::default();
    let mut sum = LossBreakdown::default();
    let mut frames = 0.0;
    for slots in episode_streams(&lengths, &order, streams, steps, builder.pad) {
        builder.fill(data, norm, &slots)?;
        let pred = net.forward_into(&builder.chunk(), &mut state, &mut cache)?;
        let (l, _) = loss(&pred, &builder.targets, class_weights, net.config.use_auxiliary, 1.0)?;
        let w: f64 = builder.targets.mask.iter().sum();
        sum.l_v += w * l.l_v;
        sum.l_g += w * l.l_g;
        sum.l_gp += w * l.l_gp;
        sum.l_cp += w * l.l_cp;
        frames += w;
    }
    let mut out = LossBreakdown {
        l_v: sum.l_v / frames,
        l_g: sum.l_g / frames,
        l_gp: sum.l_gp / frames,
        l_cp: sum.l_cp / frames,
        total: 0.0,
    };
    out.total = out.l_v + out.l_g + out.l_gp + out.l_cp;
    Ok(out)
}

/// Trains on an in-memory dataset. `on_update` sees every update's index and loss.
pub fn train_on(
    data: &Dataset,
    arm: &ArmModel,
    net_cfg: &NetConfig,
    cfg: &TrainConfig,
    mut on_update: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainOutcome, NetError> {
    cfg.validate()?;
    if data.episodes.is_empty() {
        return Err(NetError::InvalidConfig("empty dataset".into()));
    }
    let stats = stats_of(data);
    let norm = Normalization::from_stats(&stats, arm);
    let weights = cfg.class_weights.unwrap_or_else(|| class_weights(&stats.action_counts));
    let mut net = ControllerNet::new(net_cfg.clone(), derive_seed(cfg.seed, Stream::NetInit, 0))?;
    let mut adam = AdamState::new(net.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Training, 0));
    let lengths: Vec<usize> = data.episodes.iter().map(|e| e.steps.len()).collect();
    let (b, t) = (cfg.batch_size, cfg.sequence_length);
    let mut builder = ChunkBuilder::new(net_cfg, b, t);
    let mut curve = Vec::new();
    let mut grad = vec![0.0; net.param_count()];
    let mut cache = Cache::default();
    'epochs: for _ in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.episodes.len()).collect();
        order.shuffle(&mut rng);
        let mut state = StreamState::zeros(net_cfg, b);
        for slots in episode_streams(&lengths, &order, b, t, builder.pad) {
            builder.fill(data, &norm, &slots)?;
            let chunk = builder.chunk();
            let pred = net.forward_into(&chunk, &mut state, &mut cache)?;
            let (l, dy) = loss(&pred, &builder.targets, &weights, net_cfg.use_auxiliary, 1.0)?;
            grad.fill(0.0);
            net.backward_chunk(&chunk, &mut cache, &dy, &mut grad);
            adam_step(&mut net.params, &grad, &mut adam, cfg);
            on_update(curve.len(), &l);
            curve.push(l);
            if cfg.max_updates.is_some_and(|m| curve.len() >= m) {
                break 'epochs;
            }
        }
    }
    Ok(TrainOutcome {
        net,
        normalization: norm,
        adam,
        curve,
        class_weights: weights,
    })
}

/// Reads the dataset at `path` and trains on it with the reference arm's joint limits.
pub fn train(path: &Path, net_cfg: &NetConfig, cfg: &TrainConfig) -> Result<TrainOutcome, NetError> {
    let data = read_dataset(path)?;
    train_on(&data, &ArmModel::reference(), net_cfg, cfg, |_, _| {})
}
