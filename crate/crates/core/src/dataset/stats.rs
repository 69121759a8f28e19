use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format::DatasetReader;
use super::{Dataset, DatasetError, EpisodeRecord};

/// Per-dimension mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Welford accumulator.
#[derive(Clone, Debug)]
struct Running {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Running {
    fn new(dims: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dims],
            m2: vec![0.0; dims],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn finish(&self) -> Moments {
        let n = self.n.max(1) as f64;
        Moments {
            mean: self.mean.clone(),
            std: self.m2.iter().map(|m| (m / n).sqrt()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub episodes: u64,
    pub steps: u64,
    /// Counts indexed open, close, no-op.
    pub action_counts: [u64; 3],
    pub velocity: Moments,
    pub joint_angles: Moments,
    pub cube_position: Moments,
    pub gripper_position: Moments,
    /// Episode length to number of episodes.
    pub length_histogram: BTreeMap<usize, u64>,
}

struct Accumulator {
    stats: DatasetStats,
    vel: Running,
    ang: Running,
    cube: Running,
    grip: Running,
}

impl Accumulator {
    fn new() -> Self {
        let empty = Moments { mean: vec![], std: vec![] };
        Self {
            stats: DatasetStats {
                episodes: 0,
                steps: 0,
                action_counts: [0; 3],
                velocity: empty.clone(),
                joint_angles: empty.clone(),
                cube_position: empty.clone(),
                gripper_position: empty,
                length_histogram: BTreeMap::new(),
            },
            vel: Running::new(6),
            ang: Running::new(6),
            cube: Running::new(3),
            grip: Running::new(3),
        }
    }

    fn add(&mut self, e: &EpisodeRecord) {
        self.stats.episodes += 1;
        self.stats.steps += e.steps.len() as u64;
        *self.stats.length_histogram.entry(e.steps.len()).or_insert(0) += 1;
        for s in &e.steps {
            self.stats.action_counts[s.gripper_action.index()] += 1;
            self.vel.push(&s.motor_velocities);
            self.ang.push(&s.joint_angles);
            self.cube.push(s.cube_position.as_slice());
            self.grip.push(s.gripper_position.as_slice());
        }
    }

    fn finish(mut self) -> DatasetStats {
        self.stats.velocity = self.vel.finish();
        self.stats.joint_angles = self.ang.finish();
        self.stats.cube_position = self.cube.finish();
        self.stats.gripper_position = self.grip.finish();
        self.stats
    }
}

/// Single streaming pass over a dataset file.
pub fn dataset_stats(path: &Path) -> Result<DatasetStats, DatasetError> {
    let mut r = DatasetReader::open(path)?;
    let mut acc = Accumulator::new();
    for i in 0..r.len() {
        acc.add(&r.episode(i)?);
    }
    Ok(acc.finish())
}

/// Same statistics over an in-memory dataset.
pub fn stats_of(data: &Dataset) -> DatasetStats {
    let mut acc = Accumulator::new();
    for e in &data.episodes {
        acc.add(e);
    }
    acc.finish()
}
