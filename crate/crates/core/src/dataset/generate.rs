use std::collections::VecDeque;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use super::format::DatasetWriter;
use super::{DatasetError, DatasetSummary, EpisodeRecord, StepRecord};
use crate::control::{run_scripted, EpisodeRecorder, Frame, ScriptParams, World};
use crate::mathkin::ArmModel;
use crate::render::{render, Camera, RenderState};
use crate::scene::{sample_scene, RandomisationConfig, Scene};
use crate::seed::{derive_seed, Stream};

/// Attempts in the sliding window used to detect a stalled generator.
pub const STALL_WINDOW: usize = 200;

#[derive(Clone, Debug)]
pub struct GenerateOptions {
    pub arm: ArmModel,
    pub script: ScriptParams,
    /// Generation stops when fewer than this fraction of the last
    /// `STALL_WINDOW` attempts succeeded.
    pub min_success_rate: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            arm: ArmModel::reference(),
            script: ScriptParams::default(),
            min_success_rate: 0.01,
        }
    }
}

struct Renderer<'a> {
    scene: &'a Scene,
    arm: &'a ArmModel,
    camera: Camera,
    steps: Vec<StepRecord>,
}

impl EpisodeRecorder for Renderer<'_> {
    fn record(&mut self, frame: &Frame, world: &World) {
        let image = render(self.scene, self.arm, &RenderState::of_world(world), &self.camera);
        self.steps.push(StepRecord {
            image,
            joint_angles: frame.joints.angles,
            motor_velocities: frame.joints.velocities,
            gripper_action: frame.action,
            cube_position: frame.cube_position,
            gripper_position: frame.tip_position,
            stage_id: frame.stage,
        });
    }
}

/// Samples, scripts and renders one attempt. Returns `None` when planning
/// fails or the cube does not end up in the basket.
pub fn record_episode(
    cfg: &RandomisationConfig,
    opts: &GenerateOptions,
    master_seed: u64,
    attempt: u64,
) -> Option<EpisodeRecord> {
    let scene_seed = derive_seed(master_seed, Stream::TrainEpisode, attempt);
    let scene = sample_scene(cfg, scene_seed);
    let mut rec = Renderer {
        scene: &scene,
        arm: &opts.arm,
        camera: Camera::from_spec(&scene.camera),
        steps: Vec::new(),
    };
    let outcome = run_scripted(&scene, &opts.arm, &opts.script, &mut rec).ok()?;
    outcome.success.then(|| EpisodeRecord {
        steps: rec.steps,
        scene_seed,
        attempt,
        success: true,
        final_cube_position: outcome.final_cube_position,
        basket: scene.basket.clone(),
    })
}

/// Generates `n_episodes` successful episodes with default options.
pub fn generate(
    cfg: &RandomisationConfig,
    n_episodes: usize,
    workers: usize,
    master_seed: u64,
    path: &Path,
) -> Result<DatasetSummary, DatasetError> {
    generate_with(cfg, n_episodes, workers, master_seed, path, &GenerateOptions::default(), |_| {})
}

/// Runs attempts `0, 1, 2, ...` on a worker pool and persists the first
/// `n_episodes` successes in attempt order, so the file depends only on
/// `(cfg, n_episodes, master_seed)`. `progress` sees the running episode count.
pub fn generate_with(
    cfg: &RandomisationConfig,
    n_episodes: usize,
    workers: usize,
    master_seed: u64,
    path: &Path,
    opts: &GenerateOptions,
    mut progress: impl FnMut(usize),
) -> Result<DatasetSummary, DatasetError> {
    if n_episodes == 0 {
        return Err(DatasetError::InvalidArgument("n_episodes must be positive".into()));
    }
    cfg.validate().map_err(|e| DatasetError::InvalidArgument(e.to_string()))?;
    let workers = workers.max(1);
    let chunk = (4 * workers).max(8) as u64;
    let mut writer = DatasetWriter::create(path, cfg.hash())?;
    let mut window: VecDeque<bool> = VecDeque::with_capacity(STALL_WINDOW);
    let mut written = 0usize;
    let mut next_attempt = 0u64;
    while written < n_episodes {
        let base = next_attempt;
        let counter = AtomicU64::new(base);
        let mut results: Vec<(u64, Option<EpisodeRecord>)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let k = counter.fetch_add(1, Ordering::Relaxed);
                            if k >= base + chunk {
                                break;
                            }
                            out.push((k, record_episode(cfg, opts, master_seed, k)));
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("generation worker panicked"))
                .collect()
        });
        results.sort_by_key(|r| r.0);
        next_attempt = base + chunk;
        for (k, ep) in results {
            if window.len() == STALL_WINDOW {
                window.pop_front();
            }
            window.push_back(ep.is_some());
            if let Some(ep) = ep {
                writer.push(&ep)?;
                written += 1;
                progress(written);
                if written == n_episodes {
                    break;
                }
            }
            let successes = window.iter().filter(|&&s| s).count();
            if window.len() == STALL_WINDOW && (successes as f64) < opts.min_success_rate * STALL_WINDOW as f64 {
                return Err(DatasetError::GenerationStalled {
                    attempts: k + 1,
                    successes,
                    window: STALL_WINDOW,
                });
            }
        }
    }
    writer.finish()
}
