//! Grid evaluation: 16 cube cells times two basket sides, scored on the
//! vicinity / grasped / full-task ladder, plus the ablation matrix.

mod ablation;
mod controller;

pub use ablation::{
    desk_training, run_ablation_matrix, AblationRow, Budget, MatrixConfig, MatrixReport, RowResult, NET_ROWS,
};
pub use controller::{Command, Controller, NetController, Observation, OracleController, ZeroController};

use serde::{Deserialize, Serialize};

use crate::control::{Actuator, ControlError, GripperAction, World};
use crate::dataset::DatasetError;
use crate::mathkin::ArmModel;
use crate::net::NetError;
use crate::render::{render, Camera, RenderState};
use crate::scene::{sample_scene_with, RandomisationConfig, Scene, Side};
use crate::seed::{derive_seed, Stream};

/// Cube cell centres along x (rows) and y (columns), 10 cm apart.
pub const CELL_X: [f64; 4] = [0.30, 0.40, 0.50, 0.60];
pub const CELL_Y: [f64; 4] = [-0.15, -0.05, 0.05, 0.15];
pub const TRIALS: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("controller failure: {0}")]
    Controller(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub cell_index: usize,
    pub basket_side: Side,
    pub scene_seed: u64,
    /// Label of the controller under test.
    pub controller: String,
}

impl TrialSpec {
    /// Trial `i` of the 32-trial grid: cells row-major, left side first.
    pub fn grid(i: usize, eval_seed: u64, controller: &str) -> Self {
        Self {
            cell_index: i % 16,
            basket_side: if i < 16 { Side::Left } else { Side::Right },
            scene_seed: derive_seed(eval_seed, Stream::EvalTrial, i as u64),
            controller: controller.to_string(),
        }
    }

    pub fn cell_center(&self) -> (f64, f64) {
        (CELL_X[self.cell_index / 4], CELL_Y[self.cell_index % 4])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Scene distribution for the nuisance variables of evaluation scenes.
    pub scene: RandomisationConfig,
    pub max_steps: usize,
    pub dt: f64,
    pub grasp_radius: f64,
    pub vicinity_radius: f64,
    /// Lift above the cube's starting height that counts as a grasp.
    pub lift_height: f64,
}

impl Default for TrialOptions {
    fn default() -> Self {
        let mut scene = RandomisationConfig::default();
        scene.switches.distractors = false;
        Self {
            scene,
            max_steps: 600,
            dt: 0.05,
            grasp_radius: 0.02,
            vicinity_radius: 0.02,
            lift_height: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub spec: TrialSpec,
    pub cube_vicinity: bool,
    pub cube_grasped: bool,
    pub full_task: bool,
    pub steps: usize,
    pub min_tip_distance: f64,
}

/// Evaluation scene of a trial: the cube pinned to the cell centre, the
/// basket on the requested side, everything else drawn from the seed.
pub fn trial_scene(spec: &TrialSpec, opts: &TrialOptions) -> Scene {
    sample_scene_with(&opts.scene, spec.scene_seed, Some((spec.cell_center(), spec.basket_side)))
}

/// One closed-loop trial. Each step renders the camera image (if the
/// controller wants one), applies the gripper event, then drives the joints
/// through the PID and motor loop. The trial ends when the cube is released
/// or after `max_steps`.
pub fn run_trial(
    spec: &TrialSpec,
    model: &ArmModel,
    controller: &mut dyn Controller,
    opts: &TrialOptions,
) -> Result<TrialOutcome, EvalError> {
    let scene = trial_scene(spec, opts);
    let mut world = World::new(&scene, model);
    let camera = Camera::from_spec(&scene.camera);
    let mut actuator = Actuator::default();
    controller.reset(&scene, model)?;
    let start_z = world.cube_position().z;
    let mut min_dist = world.tip_to_cube();
    let mut grasped = false;
    let mut steps = 0;
    while steps < opts.max_steps {
        let image = controller
            .needs_image()
            .then(|| render(&scene, model, &RenderState::of_world(&world), &camera));
        let angles = world.joints.angles;
        let cmd = controller.act(&Observation {
            image: image.as_ref(),
            joint_angles: &angles,
            world: &world,
        })?;
        steps += 1;
        let mut released = false;
        match cmd.action {
            GripperAction::Close if !world.gripper.is_closed() => {
                world.close_gripper(opts.grasp_radius);
            }
            GripperAction::Open if world.gripper.is_closed() => {
                released = world.is_attached();
                world.open_gripper();
            }
            _ => {}
        }
        if released {
            break;
        }
        let v = cmd.velocities.map(|x| if x.is_finite() { x } else { 0.0 });
        actuator.step(&mut world, &v, opts.dt);
        min_dist = min_dist.min(world.tip_to_cube());
        if world.is_attached() && world.cube_position().z - start_z >= opts.lift_height {
            grasped = true;
        }
    }
    let cube_vicinity = min_dist <= opts.vicinity_radius;
    let cube_grasped = cube_vicinity && grasped;
    Ok(TrialOutcome {
        spec: spec.clone(),
        cube_vicinity,
        cube_grasped,
        full_task: cube_grasped && world.cube_in_basket(),
        steps,
        min_tip_distance: min_dist,
    })
}

/// Outcomes of the 32-trial grid and their aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub controller: String,
    pub eval_seed: u64,
    pub trials: Vec<TrialOutcome>,
    pub vicinity: usize,
    pub grasped: usize,
    pub full: usize,
}

impl TrialReport {
    pub fn from_trials(controller: &str, eval_seed: u64, mut trials: Vec<TrialOutcome>) -> Self {
        trials.sort_by_key(|t| (t.spec.basket_side == Side::Right, t.spec.cell_index));
        let count = |f: fn(&TrialOutcome) -> bool| trials.iter().filter(|t| f(t)).count();
        Self {
            controller: controller.to_string(),
            eval_seed,
            vicinity: count(|t| t.cube_vicinity),
            grasped: count(|t| t.cube_grasped),
            full: count(|t| t.full_task),
            trials,
        }
    }

    pub fn percent(count: usize) -> f64 {
        100.0 * count as f64 / TRIALS as f64
    }

    /// `(vicinity, grasped, full)` percentages.
    pub fn percentages(&self) -> (f64, f64, f64) {
        (Self::percent(self.vicinity), Self::percent(self.grasped), Self::percent(self.full))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Text table with one row per report.
pub fn format_table(rows: &[(String, &TrialReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(10);
    let mut out = format!("{:width$}  {:>13}  {:>12}  {:>9}\n", "model", "cube vicinity", "cube grasped", "full task");
    for (name, r) in rows {
        let (v, g, f) = r.percentages();
        out.push_str(&format!("{name:width$}  {v:>12.1}%  {g:>11.1}%  {f:>8.1}%\n"));
    }
    out
}

/// Runs all 32 trials, `workers` at a time, each with a fresh controller from `make`.
pub fn run_grid<C, F>(make: F, model: &ArmModel, eval_seed: u64, opts: &TrialOptions, workers: usize) -> Result<TrialReport, EvalError>
where
    C: Controller,
    F: Fn() -> Result<C, EvalError> + Sync,
{
    let name = make()?.name();
    let specs: Vec<TrialSpec> = (0..TRIALS).map(|i| TrialSpec::grid(i, eval_seed, &name)).collect();
    run_specs(&make, &specs, model, opts, workers).map(|t| TrialReport::from_trials(&name, eval_seed, t))
}

/// Runs arbitrary trials; results come back in `specs` order.
pub fn run_specs<C, F>(make: &F, specs: &[TrialSpec], model: &ArmModel, opts: &TrialOptions, workers: usize) -> Result<Vec<TrialOutcome>, EvalError>
where
    C: Controller,
    F: Fn() -> Result<C, EvalError> + Sync,
{
    let workers = workers.clamp(1, specs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Vec<(usize, Result<TrialOutcome, EvalError>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= specs.len() {
                            break;
                        }
                        let r = make().and_then(|mut c| run_trial(&specs[i], model, &mut c, opts));
                        out.push((i, r));
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trial worker panicked")).collect()
    });
    let mut all: Vec<(usize, Result<TrialOutcome, EvalError>)> = results.into_iter().flatten().collect();
    all.sort_by_key(|(i, _)| *i);
    all.into_iter().map(|(_, r)| r).collect()
}
