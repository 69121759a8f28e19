use randgrasp::control::GripperAction;
use randgrasp::evalharness::{
    run_grid, run_specs, run_trial, Command, Controller, EvalError, Observation, OracleController, TrialOptions,
    TrialReport, TrialSpec, ZeroController, TRIALS,
};
use randgrasp::mathkin::ArmModel;
use randgrasp::scene::Scene;

fn oracle() -> Result<OracleController, EvalError> {
    Ok(OracleController::default())
}

#[test]
fn oracle_clears_the_whole_grid() {
    let start = std::time::Instant::now();
    let r = run_grid(oracle, &ArmModel::reference(), 0, &TrialOptions::default(), 1).unwrap();
    for t in &r.trials {
        assert!(t.full_task, "{t:?}");
    }
    assert_eq!((r.vicinity, r.grasped, r.full), (32, 32, 32));
    assert_eq!(r.percentages(), (100.0, 100.0, 100.0));
    assert_eq!(r.trials.len(), TRIALS);
    eprintln!("oracle grid in {:?}, steps {:?}", start.elapsed(), r.trials.iter().map(|t| t.steps).collect::<Vec<_>>());
}

/// Follows the oracle but swallows every close command.
struct NeverCloses(OracleController);

impl Controller for NeverCloses {
    fn name(&self) -> String {
        "never-closes".into()
    }

    fn reset(&mut self, scene: &Scene, model: &ArmModel) -> Result<(), EvalError> {
        self.0.reset(scene, model)
    }

    fn act(&mut self, obs: &Observation) -> Result<Command, EvalError> {
        let mut cmd = self.0.act(obs)?;
        if cmd.action == GripperAction::Close {
            cmd.action = GripperAction::NoOp;
        }
        Ok(cmd)
    }

    fn needs_image(&self) -> bool {
        false
    }
}

fn short() -> TrialOptions {
    TrialOptions {
        max_steps: 300,
        ..TrialOptions::default()
    }
}

#[test]
fn inert_controller_fails_every_category() {
    let model = ArmModel::reference();
    for i in [0, 5, 21, 31] {
        let spec = TrialSpec::grid(i, 3, "zero");
        let t = run_trial(&spec, &model, &mut ZeroController, &TrialOptions::default()).unwrap();
        assert!(!t.cube_vicinity && !t.cube_grasped && !t.full_task, "{t:?}");
        assert_eq!(t.steps, 600);
    }
}

#[test]
fn reaching_without_closing_only_scores_vicinity() {
    let model = ArmModel::reference();
    for i in [2, 18] {
        let spec = TrialSpec::grid(i, 0, "never-closes");
        let mut c = NeverCloses(OracleController::default());
        let t = run_trial(&spec, &model, &mut c, &short()).unwrap();
        assert!(t.cube_vicinity, "{t:?}");
        assert!(!t.cube_grasped && !t.full_task, "{t:?}");
    }
}

#[test]
fn grid_specs_cover_cells_and_sides() {
    let specs: Vec<TrialSpec> = (0..TRIALS).map(|i| TrialSpec::grid(i, 9, "x")).collect();
    let mut centres: Vec<(f64, f64)> = specs[..16].iter().map(|s| s.cell_center()).collect();
    for (a, b) in specs[..16].iter().zip(&specs[16..]) {
        assert_eq!(a.cell_index, b.cell_index);
        assert_ne!(a.basket_side, b.basket_side);
        assert_ne!(a.scene_seed, b.scene_seed);
    }
    centres.sort_by(|a, b| a.partial_cmp(b).unwrap());
    centres.dedup();
    assert_eq!(centres.len(), 16);
    for (x, y) in &centres {
        // Neighbouring centres are 10 cm apart on both axes.
        let nx = centres.iter().filter(|(u, v)| v == y && ((u - x).abs() - 0.1).abs() < 1e-9).count();
        let ny = centres.iter().filter(|(u, v)| u == x && ((v - y).abs() - 0.1).abs() < 1e-9).count();
        assert!((1..=2).contains(&nx) && (1..=2).contains(&ny));
    }
}

#[test]
fn order_of_execution_does_not_change_the_report() {
    let model = ArmModel::reference();
    let opts = short();
    let forward: Vec<TrialSpec> = (0..TRIALS).map(|i| TrialSpec::grid(i, 4, "oracle")).collect();
    let mut shuffled = forward.clone();
    shuffled.reverse();
    shuffled.swap(3, 17);
    let a = run_specs(&oracle, &forward, &model, &opts, 1).unwrap();
    let b = run_specs(&oracle, &shuffled, &model, &opts, 3).unwrap();
    let ra = TrialReport::from_trials("oracle", 4, a);
    let rb = TrialReport::from_trials("oracle", 4, b);
    assert_eq!(ra, rb);
    let again = run_grid(oracle, &model, 4, &opts, 2).unwrap();
    assert_eq!(ra, again);
}

#[test]
fn ladder_holds_and_counts_are_out_of_thirty_two() {
    let model = ArmModel::reference();
    let opts = TrialOptions {
        max_steps: 120,
        ..TrialOptions::default()
    };
    let r = run_grid(oracle, &model, 11, &opts, 2).unwrap();
    assert_eq!(r.trials.len(), 32);
    for t in &r.trials {
        assert!(!t.full_task || t.cube_grasped);
        assert!(!t.cube_grasped || t.cube_vicinity);
    }
    assert!(r.full <= r.grasped && r.grasped <= r.vicinity && r.vicinity <= 32);
    let (v, _, _) = r.percentages();
    assert_eq!(v, 100.0 * r.vicinity as f64 / 32.0);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["trials"].as_array().unwrap().len(), 32);
}

#[test]
fn tiny_matrix_has_one_row_per_request() {
    use randgrasp::evalharness::{run_ablation_matrix, Budget, MatrixConfig};
    let dir = tempfile::tempdir().unwrap();
    let cfg = MatrixConfig {
        rows: vec!["full".into(), "bogus_row".into()],
        budget: Budget::tiny(),
        scene: randgrasp::scene::RandomisationConfig::default(),
        data_seed: 1,
        eval_seed: 2,
        size_sweep: vec![],
        work_dir: dir.path().to_path_buf(),
    };
    let mut lines = Vec::new();
    let report = run_ablation_matrix(&cfg, &ArmModel::reference(), |l| lines.push(l.to_string()));
    assert_eq!(report.rows.len(), 2);
    let full = report.rows[0].report.as_ref().expect("full row ran");
    let (v, g, f) = full.percentages();
    for p in [v, g, f] {
        assert!((0.0..=100.0).contains(&p));
    }
    assert!(report.rows[0].frames >= 400);
    // An unknown row is reported without stopping the matrix.
    assert!(report.rows[1].report.is_none() && report.rows[1].error.is_some());
    let table = report.to_table();
    assert!(table.contains("full") && table.contains("cube vicinity"));
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert!(!lines.is_empty());
}
