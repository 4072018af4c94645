use lis_secrecy::ObjectiveId;
use lis_secrecy_sim::config::{load_config, parse_config, ExperimentConfig, ExperimentId, SolverKind};
use lis_secrecy_sim::SimError;

#[test]
fn empty_file_gives_defaults() {
    let cfg = parse_config("", "empty").unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    let ch = cfg.channel;
    assert_eq!((ch.dims.n_t, ch.dims.n_i, ch.dims.n_e), (16, 32, 10));
    assert_eq!(ch.rician_k, 10.0);
    assert_eq!(ch.noise_power_dbm, -80.0);
    assert_eq!((ch.geometry.zeta_ai, ch.geometry.zeta_ir, ch.geometry.zeta_ie), (2.0, 2.8, 3.0));
    assert_eq!((cfg.trials, cfg.saa.k_samples, cfg.spg.n_iters), (10, 500, 60));
    assert_eq!(cfg.validation_samples, 10_000);
    cfg.validate().unwrap();
}

#[test]
fn single_key_overrides_only_that_field() {
    let cfg = parse_config("# comment\n\ndims.n_i = 40\n", "t").unwrap();
    let mut want = ExperimentConfig::default();
    want.channel.dims.n_i = 40;
    assert_eq!(cfg, want);
}

#[test]
fn full_file_round_trip() {
    let text = "\
experiment.id = an_comparison
experiment.solvers = saa, spg
experiment.power_grid_dbm = 10, 20.5
experiment.trials = 3
experiment.master_seed = 99
geometry.eve = 1, 2, 3
geometry.zeta_ir = 2.2
saa.l0 = 0.5
spg.alpha = 1.5
alt.tol = 1e-6
";
    let cfg = parse_config(text, "t").unwrap();
    assert_eq!(cfg.experiment, ExperimentId::AnComparison);
    assert_eq!(cfg.solvers, vec![SolverKind::Saa, SolverKind::Spg]);
    assert_eq!(cfg.power_grid_dbm, vec![10.0, 20.5]);
    assert_eq!((cfg.trials, cfg.master_seed), (3, 99));
    assert_eq!(cfg.channel.geometry.eve_pos, [1.0, 2.0, 3.0]);
    assert_eq!(cfg.channel.geometry.zeta_ir, 2.2);
    assert_eq!(cfg.saa.l0, Some(0.5));
    assert_eq!(cfg.spg.alpha, 1.5);
    assert_eq!(cfg.alt.tol, 1e-6);
    assert_eq!(cfg.objectives(), vec![ObjectiveId::C1, ObjectiveId::C3]);
}

#[test]
fn malformed_line_names_the_line() {
    let err = parse_config("dims.n_t = 4\nthis is not valid\n", "bad.cfg").unwrap_err();
    match &err {
        SimError::Parse { path, line, .. } => assert_eq!((path.as_str(), *line), ("bad.cfg", 2)),
        other => panic!("unexpected error {other:?}"),
    }
    assert!(err.to_string().starts_with("bad.cfg:2:"));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unknown_key_and_bad_value_are_errors() {
    let e = parse_config("dims.n_x = 4", "t").unwrap_err();
    assert!(e.to_string().contains("unknown key `dims.n_x`"), "{e}");
    let e = parse_config("\n\nexperiment.trials = ten", "t").unwrap_err();
    assert!(matches!(e, SimError::Parse { line: 3, .. }), "{e}");
    let e = parse_config("geometry.rx = 1, 2", "t").unwrap_err();
    assert!(e.to_string().contains("three coordinates"), "{e}");
    assert!(parse_config("experiment.solvers = saa, newton", "t").is_err());
    assert!(parse_config("dims.n_i =", "t").is_err());
}

#[test]
fn validation_rejects_bad_grids_and_solver_mismatch() {
    let cfg = parse_config("experiment.power_grid_dbm = 5\nexperiment.trials = 0", "t").unwrap();
    assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
    let cfg = parse_config("experiment.id = nis_sweep\nexperiment.nis_grid = 8, 0", "t").unwrap();
    assert!(cfg.validate().is_err());
    let cfg = parse_config("experiment.id = an_comparison\nexperiment.solvers = altopt", "t").unwrap();
    assert!(cfg.validate().is_err());
    let cfg = parse_config("experiment.objective = c1\nexperiment.solvers = altopt, saa", "t").unwrap();
    cfg.validate().unwrap();
}

#[test]
fn missing_file_reports_path() {
    let err = load_config(std::path::Path::new("/definitely/not/here.cfg")).unwrap_err();
    assert!(err.to_string().contains("/definitely/not/here.cfg"));
    assert_eq!(err.exit_code(), 1);
}
