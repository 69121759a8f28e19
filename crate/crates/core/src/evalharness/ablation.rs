use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{format_table, run_grid, EvalError, NetController, TrialOptions, TrialReport};
use crate::dataset::{generate, read_dataset, Dataset};
use crate::mathkin::ArmModel;
use crate::net::{train_on, NetConfig, TrainConfig};
use crate::scene::{apply_ablation, RandomisationConfig, ABLATIONS};

/// Rows that change the network rather than the training scenes.
pub const NET_ROWS: [&str; 3] = ["no_lstm", "no_auxiliary", "no_joint_angles"];

/// Data, training and evaluation effort spent per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub name: String,
    /// Training frames per row (whole episodes, so slightly more).
    pub frames: usize,
    pub net: NetConfig,
    pub train: TrainConfig,
    pub trial: TrialOptions,
    pub workers: usize,
}

impl Budget {
    /// A few episodes, a few updates and short trials: a schema check.
    pub fn tiny() -> Self {
        let trial = TrialOptions {
            max_steps: 40,
            ..TrialOptions::default()
        };
        Self {
            name: "tiny".into(),
            frames: 400,
            net: NetConfig::tiny(),
            train: TrainConfig {
                batch_size: 4,
                max_updates: Some(10),
                learning_rate: 1e-3,
                ..TrainConfig::default()
            },
            trial,
            workers: 1,
        }
    }

    /// Desk-scale run on the 64 px profile.
    pub fn desk() -> Self {
        Self {
            name: "desk".into(),
            frames: 20_000,
            net: NetConfig::desk(),
            train: desk_training(),
            trial: TrialOptions::default(),
            workers: 1,
        }
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "tiny" => Some(Self::tiny()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }
}

/// Training schedule used for desk-scale learned controllers.
pub fn desk_training() -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        max_updates: Some(3000),
        epochs: usize::MAX,
        ..TrainConfig::default()
    }
}

/// Scene distribution and network of one matrix row.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub name: String,
    pub scene: RandomisationConfig,
    pub net: NetConfig,
}

impl AblationRow {
    pub fn resolve(name: &str, scene: &RandomisationConfig, net: &NetConfig) -> Result<Self, EvalError> {
        let mut net = net.clone();
        let scene = match name {
            "no_lstm" => {
                net.use_lstm = false;
                scene.clone()
            }
            "no_auxiliary" => {
                net.use_auxiliary = false;
                scene.clone()
            }
            "no_joint_angles" => {
                net.use_joint_angles = false;
                scene.clone()
            }
            other => apply_ablation(scene, other).map_err(|e| EvalError::InvalidArgument(e.to_string()))?,
        };
        Ok(Self {
            name: name.to_string(),
            scene,
            net,
        })
    }

    pub fn all_names() -> Vec<&'static str> {
        ABLATIONS.iter().chain(NET_ROWS.iter()).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixConfig {
    pub rows: Vec<String>,
    pub budget: Budget,
    /// Training scene distribution before row ablations.
    pub scene: RandomisationConfig,
    pub data_seed: u64,
    pub eval_seed: u64,
    /// Frame budgets of the dataset-size sweep over the full row (may be empty).
    pub size_sweep: Vec<usize>,
    /// Where generated datasets are kept.
    pub work_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub name: String,
    /// Frames actually trained on.
    pub frames: usize,
    pub report: Option<TrialReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub budget: String,
    pub rows: Vec<RowResult>,
    pub sweep: Vec<RowResult>,
}

impl MatrixReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (title, rows) in [("ablations", &self.rows), ("dataset size", &self.sweep)] {
            if rows.is_empty() {
                continue;
            }
            out.push_str(&format!("{title} ({} budget)\n", self.budget));
            let ok: Vec<(String, &TrialReport)> = rows
                .iter()
                .filter_map(|r| r.report.as_ref().map(|rep| (format!("{} [{} frames]", r.name, r.frames), rep)))
                .collect();
            out.push_str(&format_table(&ok));
            for r in rows.iter().filter(|r| r.error.is_some()) {
                out.push_str(&format!("{}: failed: {}\n", r.name, r.error.as_deref().unwrap_or("")));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Generates (or reuses) a dataset of at least `frames` frames for `scene`.
fn dataset_for(
    cfg: &MatrixConfig,
    scene: &RandomisationConfig,
    frames: usize,
    cache: &mut BTreeMap<(u64, usize), Dataset>,
) -> Result<Dataset, EvalError> {
    let key = (scene.hash(), frames);
    if let Some(d) = cache.get(&key) {
        return Ok(d.clone());
    }
    std::fs::create_dir_all(&cfg.work_dir).map_err(crate::dataset::DatasetError::from)?;
    let path = cfg.work_dir.join(format!("{:016x}-{frames}.rgds", key.0));
    // episodes run a couple of hundred steps; grow the request until it covers the budget
    let mut episodes = frames.div_ceil(200).max(1);
    let data = loop {
        generate(scene, episodes, cfg.budget.workers, cfg.data_seed, &path)?;
        let d = read_dataset(&path)?;
        if d.steps() >= frames {
            break d.prefix_frames(frames);
        }
        let have = d.steps().max(1);
        episodes = (episodes * frames).div_ceil(have) + 1;
    };
    cache.insert(key, data.clone());
    Ok(data)
}

fn evaluate(
    cfg: &MatrixConfig,
    model: &ArmModel,
    name: &str,
    net: &NetConfig,
    data: &Dataset,
) -> Result<TrialReport, EvalError> {
    let out = train_on(data, model, net, &cfg.budget.train, |_, _| {})?;
    let make = || Ok(NetController::new(out.net.clone(), out.normalization.clone(), name));
    run_grid(make, model, cfg.eval_seed, &cfg.budget.trial, cfg.budget.workers)
}

/// Trains and evaluates every row, then the dataset-size sweep. A failing row
/// is reported in place and does not stop the others.
pub fn run_ablation_matrix(cfg: &MatrixConfig, model: &ArmModel, mut log: impl FnMut(&str)) -> MatrixReport {
    let mut cache = BTreeMap::new();
    let mut run = |name: &str, frames: usize| -> RowResult {
        log(&format!("row {name}: {frames} frames"));
        let result = AblationRow::resolve(name, &cfg.scene, &cfg.budget.net).and_then(|row| {
            let data = dataset_for(cfg, &row.scene, frames, &mut cache)?;
            let report = evaluate(cfg, model, name, &row.net, &data)?;
            Ok((data.steps(), report))
        });
        match result {
            Ok((frames, report)) => RowResult {
                name: name.to_string(),
                frames,
                report: Some(report),
                error: None,
            },
            Err(e) => RowResult {
                name: name.to_string(),
                frames: 0,
                report: None,
                error: Some(e.to_string()),
            },
        }
    };
    let rows = cfg.rows.iter().map(|r| run(r, cfg.budget.frames)).collect();
    let sweep = cfg.size_sweep.iter().map(|&f| run("full", f)).collect();
    MatrixReport {
        budget: cfg.budget.name.clone(),
        rows,
        sweep,
    }
}
