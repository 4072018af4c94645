use std::collections::HashSet;
use std::process::Command;

use lis_secrecy::rng::child_rng;
use lis_secrecy_sim::config::{parse_config, ExperimentConfig, SEED_ENV};
use lis_secrecy_sim::harness::{baseline_random_phase, collect_rows, run_experiment, tasks};
use lis_secrecy_sim::output::HEADER;

fn small(text: &str) -> ExperimentConfig {
    let base = "\
dims.n_t = 4
dims.n_i = 8
dims.n_e = 2
saa.k_samples = 60
saa.max_outer = 20
spg.n_iters = 12
spg.validation_samples = 200
experiment.validation_samples = 500
";
    parse_config(&format!("{base}{text}"), "test").unwrap()
}

#[test]
fn one_grid_point_one_trial_gives_one_final_row_per_solver() {
    let cfg = small("experiment.power_grid_dbm = 20\nexperiment.trials = 1\nexperiment.solvers = saa, spg, altopt\n");
    let rows = collect_rows(&cfg).unwrap();
    let finals: Vec<_> = rows.iter().filter(|r| r.is_final()).collect();
    assert_eq!(finals.len(), 3);
    let solvers: Vec<_> = finals.iter().map(|r| r.solver.as_str()).collect();
    assert_eq!(solvers, ["saa", "spg", "altopt"]);
    assert!(rows.len() > 3, "trace rows expected");
    assert!(rows.iter().all(|r| r.std_error >= 0.0));
    for s in ["saa", "spg", "altopt"] {
        let its: Vec<i64> = rows.iter().filter(|r| r.solver == s && !r.is_final()).map(|r| r.iteration).collect();
        assert_eq!(its[0], 0, "{s} trace starts at iteration 0");
        assert!(its.windows(2).all(|w| w[1] == w[0] + 1), "{s} trace iterations consecutive");
    }
}

#[test]
fn same_config_gives_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut cfg = small("experiment.power_grid_dbm = 15, 25\nexperiment.trials = 2\nexperiment.solvers = saa, spg\nexperiment.baseline = true\n");
        cfg.output_path = dir.path().join(name);
        run_experiment(&cfg).unwrap();
        paths.push(cfg.output_path);
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    let rate = text.lines().nth(1).unwrap().split(',').nth(8).unwrap();
    let mantissa = rate.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 12, "{rate}");
}

#[test]
fn row_keys_are_unique() {
    let cfg = small("experiment.id = an_comparison\nexperiment.power_grid_dbm = 10, 20\nexperiment.trials = 2\nexperiment.solvers = saa\nexperiment.baseline = true\n");
    let rows = collect_rows(&cfg).unwrap();
    let mut seen = HashSet::new();
    for r in &rows {
        let key = (r.seed, r.solver.clone(), r.objective_id, r.p_dbm.to_bits(), r.n_i, r.iteration);
        assert!(seen.insert(key), "duplicate row {r:?}");
    }
    let seeds: HashSet<u64> = tasks(&cfg).iter().map(|t| t.seed).collect();
    assert_eq!(seeds.len(), 4);
}

#[test]
fn optimized_rate_beats_random_phase_baseline() {
    let cfg = small("experiment.power_grid_dbm = 10, 25\nexperiment.trials = 3\nexperiment.solvers = saa, altopt\n");
    let rows = collect_rows(&cfg).unwrap();
    let base = baseline_random_phase(&cfg, &mut child_rng(5, &[])).unwrap();
    assert_eq!(base.len(), 6);
    for b in &base {
        for r in rows.iter().filter(|r| r.is_final() && r.seed == b.seed) {
            assert!(r.rate_bits >= b.rate_bits, "{} {} < baseline {}", r.solver, r.rate_bits, b.rate_bits);
        }
    }
    let again = baseline_random_phase(&cfg, &mut child_rng(5, &[])).unwrap();
    assert_eq!(base, again);
}

#[test]
fn nis_sweep_and_convergence_layouts() {
    let cfg = small("experiment.id = nis_sweep\nexperiment.nis_grid = 4, 6\nexperiment.trials = 1\nexperiment.solvers = altopt\n");
    let finals: Vec<_> = collect_rows(&cfg).unwrap().into_iter().filter(|r| r.is_final()).collect();
    assert_eq!(finals.iter().map(|r| r.n_i).collect::<Vec<_>>(), vec![4, 6]);

    let cfg = small("experiment.id = convergence\nexperiment.objective = c3\nexperiment.trials = 1\nexperiment.solvers = saa, spg\n");
    let rows = collect_rows(&cfg).unwrap();
    let labels: Vec<_> = rows.iter().filter(|r| r.is_final()).map(|r| (r.solver.clone(), r.p_dbm)).collect();
    assert_eq!(
        labels,
        vec![("saa-case1".into(), 15.0), ("saa-case2".into(), 15.0), ("spg-case1".into(), 25.0), ("spg-case2".into(), 25.0)]
    );
}

#[test]
fn c2_c4_experiment_uses_single_antenna_eavesdropper() {
    let cfg = small("experiment.id = c2_c4_ne1\nexperiment.power_grid_dbm = 20\nexperiment.trials = 1\nexperiment.solvers = spg\n");
    assert!(tasks(&cfg).iter().all(|t| t.channel.dims.n_e == 1));
    let finals: Vec<_> = collect_rows(&cfg).unwrap().into_iter().filter(|r| r.is_final()).collect();
    assert_eq!(finals.len(), 2);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lis-secrecy"))
}

#[test]
fn cli_exit_codes_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    std::fs::write(&good, "experiment.master_seed = 1\n").unwrap();
    let out = cli().arg("validate").arg(&good).env_remove(SEED_ENV).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 1"));

    let out = cli().arg("validate").arg(&good).env(SEED_ENV, "77").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 77"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "dims.n_t = 4\nnonsense\n").unwrap();
    let out = cli().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:2"));

    let unwritable = dir.path().join("run.cfg");
    std::fs::write(
        &unwritable,
        "dims.n_t = 2\ndims.n_i = 4\ndims.n_e = 1\nexperiment.trials = 1\nexperiment.power_grid_dbm = 20\nexperiment.solvers = altopt\nexperiment.validation_samples = 10\nexperiment.output = /nonexistent-dir/out.csv\n",
    )
    .unwrap();
    let out = cli().arg("run").arg(&unwritable).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.csv"));

    let out = cli().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
