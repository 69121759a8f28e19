//! `randgrasp` command line: dataset generation, training, evaluation,
//! scene previews and the ablation matrix.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use randgrasp::dataset::{generate_with, read_dataset, GenerateOptions};
use randgrasp::evalharness::{
    format_table, run_ablation_matrix, run_grid, AblationRow, Budget, MatrixConfig, NetController, OracleController,
    TrialOptions, TrialReport,
};
use randgrasp::mathkin::ArmModel;
use randgrasp::net::{load_checkpoint, save_checkpoint, train_on, Checkpoint, NetConfig, TrainConfig};
use randgrasp::render::render_initial;
use randgrasp::scene::{sample_scene, RandomisationConfig};
use randgrasp::seed::{derive_seed, Stream};

use manifest::RunManifest;

/// Bad input detected after argument parsing; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "randgrasp", version, about = "Domain-randomised pick-and-place: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset of scripted demonstrations.
    Generate(GenerateArgs),
    /// Train a controller on a dataset.
    Train(TrainArgs),
    /// Run the 32-trial evaluation grid.
    Eval(EvalArgs),
    /// Render sampled scenes as PPM images.
    Preview(PreviewArgs),
    /// Train and evaluate a set of ablation rows.
    Ablate(AblateArgs),
    /// Configuration file helpers.
    #[command(subcommand)]
    Config(ConfigCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    /// 64 px input, six convolutions.
    Desk,
    /// 256 px input, eight convolutions.
    Large,
}

impl Profile {
    fn net(self) -> NetConfig {
        match self {
            Profile::Desk => NetConfig::desk(),
            Profile::Large => NetConfig::large(),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Randomisation config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Successful episodes to keep.
    #[arg(short = 'n', long)]
    episodes: usize,
    #[arg(short = 'j', long, default_value_t = 1)]
    workers: usize,
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
    /// Overrides the config's image resolution with the profile's input size.
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(short, long)]
    data: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    sequence_length: Option<usize>,
    /// Stop after this many optimizer updates.
    #[arg(long)]
    updates: Option<usize>,
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_lstm: bool,
    #[arg(long)]
    no_auxiliary: bool,
    #[arg(long)]
    no_joint_angles: bool,
    /// Print the loss every this many updates (0 = never).
    #[arg(long, default_value_t = 100)]
    log_every: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Evaluate the scripted demonstrator instead of a checkpoint.
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    oracle: bool,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'j', long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 600)]
    max_steps: usize,
    /// Write the full per-trial report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PreviewArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(short = 'n', long, default_value_t = 9)]
    count: usize,
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Args)]
struct AblateArgs {
    /// Comma-separated rows; defaults to every row.
    #[arg(long, value_delimiter = ',')]
    rows: Vec<String>,
    /// `tiny` or `desk`.
    #[arg(long, default_value = "tiny")]
    budget: String,
    /// Training randomisation config; the built-in default if omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Frame budgets for the dataset-size sweep over the full row.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, default_value_t = 0)]
    eval_seed: u64,
    #[arg(short = 'j', long)]
    workers: Option<usize>,
    #[arg(long, default_value = "ablate-work")]
    work_dir: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Write the default randomisation config.
    Init {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        profile: Option<Profile>,
    },
}

fn load_config(path: &Path, profile: Option<Profile>) -> Result<RandomisationConfig> {
    if !path.is_file() {
        return Err(usage(format!("config file not found: {}", path.display())));
    }
    let mut cfg = RandomisationConfig::load(path)?;
    if let Some(p) = profile {
        cfg.resolution = p.net().input_resolution as u32;
    }
    Ok(cfg)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} not found: {}", path.display())))
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.profile)?;
    let (mut m, t0) = RunManifest::start("generate");
    m.config("randomisation", cfg.hash());
    m.seed("master", a.seed);
    let mut last = 0;
    let summary = generate_with(&cfg, a.episodes, a.workers, a.seed, &a.out, &GenerateOptions::default(), |n| {
        if n >= last + 10 {
            last = n;
            eprintln!("{n}/{} episodes", a.episodes);
        }
    })?;
    println!("wrote {} episodes, {} frames to {}", summary.episodes, summary.steps, a.out.display());
    m.artifacts.push(a.out);
    m.finish(t0)?;
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    require_file(&a.data, "dataset")?;
    let mut net = a.profile.net();
    net.use_lstm = !a.no_lstm;
    net.use_auxiliary = !a.no_auxiliary;
    net.use_joint_angles = !a.no_joint_angles;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: a.lr.unwrap_or(d.learning_rate),
        epochs: a.epochs.unwrap_or(if a.updates.is_some() { usize::MAX } else { d.epochs }),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        sequence_length: a.sequence_length.unwrap_or(d.sequence_length),
        max_updates: a.updates,
        seed: a.seed,
        ..d
    };
    let data = read_dataset(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let (mut m, t0) = RunManifest::start("train");
    m.config("dataset", data.header.config_hash);
    m.seed("training", a.seed);
    let every = a.log_every;
    let out = train_on(&data, &ArmModel::reference(), &net, &cfg, |k, l| {
        if every > 0 && k % every == 0 {
            eprintln!(
                "update {k}: total {:.4} (velocity {:.4}, gripper {:.4}, cube {:.4}, tip {:.4})",
                l.total, l.l_v, l.l_g, l.l_cp, l.l_gp
            );
        }
    })?;
    save_checkpoint(&Checkpoint::from(&out), &a.out)?;
    println!("trained {} updates on {} frames, wrote {}", out.curve.len(), data.steps(), a.out.display());
    m.artifacts.push(a.out);
    m.finish(t0)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = ArmModel::reference();
    let opts = TrialOptions {
        max_steps: a.max_steps,
        ..TrialOptions::default()
    };
    let (mut m, t0) = RunManifest::start("eval");
    m.seed("eval", a.seed);
    let report: TrialReport = if a.oracle {
        run_grid(|| Ok(OracleController::default()), &model, a.seed, &opts, a.workers)?
    } else {
        let path = a.checkpoint.expect("clap enforces --checkpoint");
        require_file(&path, "checkpoint")?;
        let ck = load_checkpoint(&path)?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let make = || NetController::from_checkpoint(&ck, label.clone());
        run_grid(make, &model, a.seed, &opts, a.workers)?
    };
    print!("{}", format_table(&[(report.controller.clone(), &report)]));
    if let Some(path) = a.json {
        std::fs::write(&path, report.to_json())?;
        m.artifacts.push(path);
        m.finish(t0)?;
    }
    Ok(())
}

fn cmd_preview(a: PreviewArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.profile)?;
    std::fs::create_dir_all(&a.out)?;
    let (mut m, t0) = RunManifest::start("preview");
    m.config("randomisation", cfg.hash());
    m.seed("master", a.seed);
    m.artifacts.push(a.out.clone());
    let arm = ArmModel::reference();
    for i in 0..a.count {
        let scene = sample_scene(&cfg, derive_seed(a.seed, Stream::Preview, i as u64));
        let path = a.out.join(format!("scene_{i:03}.ppm"));
        render_initial(&scene, &arm).write_ppm(&path)?;
        m.artifacts.push(path);
    }
    println!("wrote {} previews to {}", a.count, a.out.display());
    m.finish(t0)?;
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let mut budget = Budget::named(&a.budget).ok_or_else(|| usage(format!("unknown budget `{}`", a.budget)))?;
    if let Some(w) = a.workers {
        budget.workers = w;
    }
    let scene = match &a.config {
        Some(p) => load_config(p, None)?,
        None => RandomisationConfig::default(),
    };
    let rows = if a.rows.is_empty() {
        AblationRow::all_names().into_iter().map(String::from).collect()
    } else {
        a.rows
    };
    for r in &rows {
        if !AblationRow::all_names().contains(&r.as_str()) {
            return Err(usage(format!("unknown row `{r}`; known rows: {}", AblationRow::all_names().join(", "))));
        }
    }
    let (mut m, t0) = RunManifest::start("ablate");
    m.config("randomisation", scene.hash());
    m.seed("data", a.data_seed);
    m.seed("eval", a.eval_seed);
    let cfg = MatrixConfig {
        rows,
        budget,
        scene,
        data_seed: a.data_seed,
        eval_seed: a.eval_seed,
        size_sweep: a.sweep,
        work_dir: a.work_dir,
    };
    let report = run_ablation_matrix(&cfg, &ArmModel::reference(), |l| eprintln!("{l}"));
    print!("{}", report.to_table());
    if let Some(path) = a.json {
        std::fs::write(&path, report.to_json())?;
        m.artifacts.push(path);
        m.finish(t0)?;
    }
    if report.rows.iter().chain(&report.sweep).any(|r| r.error.is_some()) {
        anyhow::bail!("some rows failed");
    }
    Ok(())
}

fn cmd_config(c: ConfigCmd) -> Result<()> {
    match c {
        ConfigCmd::Init { out, profile } => {
            let mut cfg = RandomisationConfig::default();
            if let Some(p) = profile {
                cfg.resolution = p.net().input_resolution as u32;
            }
            cfg.save(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Preview(a) => cmd_preview(a),
        Cmd::Ablate(a) => cmd_ablate(a),
        Cmd::Config(c) => cmd_config(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
