mod common;

use common::*;
use lis_secrecy::linalg::{fro_norm, identity, zeros};
use lis_secrecy::model::EveSampleSet;
use lis_secrecy::psd_geometry::prox;
use lis_secrecy::rates::SampleModel;
use lis_secrecy::rng::rng_from_seed;
use lis_secrecy::saa::{default_l0, saa_optimize, saa_optimize_with, solve_p42, stationarity_gap, surrogate_objective, InnerSolverConfig, SaaConfig, Surrogate};
use lis_secrecy::special_cases::alt_opt_c1;
use lis_secrecy::trace::NoClock;
use lis_secrecy::{CovariancePair, ObjectiveId, PhaseVector};

fn half_split(n: usize) -> CovariancePair {
    CovariancePair::new(identity(n).scale(0.5 / n as f64), identity(n).scale(0.5 / n as f64))
}

#[test]
fn surrogate_is_tangent_at_anchor() {
    let cfg = small_config(3, 6, 2);
    let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 1, 3.0, 2.0);
    let v = PhaseVector::random(6, &mut rng);
    let set = EveSampleSet::draw(cfg.dims, 20, 4, false);
    let model = SampleModel::new(&ch, &v, &set).unwrap();
    for _ in 0..10 {
        let anchor = random_pair(3, &mut rng);
        let s = surrogate_objective(&anchor, &anchor, &set, &v, &ch, 0.7).unwrap();
        assert!((s + model.value(&anchor)).abs() < 1e-12);
    }
}

#[test]
fn surrogate_majorizes_with_mean_bound() {
    let cfg = small_config(3, 6, 2);
    let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 2, 3.0, 2.0);
    let v = PhaseVector::random(6, &mut rng);
    let set = EveSampleSet::draw(cfg.dims, 20, 5, false);
    let model = SampleModel::new(&ch, &v, &set).unwrap();
    let l = default_l0(&ch, &set);
    let anchor = random_pair(3, &mut rng);
    for _ in 0..100 {
        let p = random_pair(3, &mut rng);
        let s = surrogate_objective(&p, &anchor, &set, &v, &ch, l).unwrap();
        assert!(s >= -model.value(&p) - 1e-10, "surrogate {s} below {}", -model.value(&p));
    }
}

#[test]
fn large_weight_pins_noise_to_anchor() {
    let cfg = small_config(3, 6, 2);
    let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 3, 3.0, 2.0);
    let v = PhaseVector::random(6, &mut rng);
    let set = EveSampleSet::draw(cfg.dims, 10, 6, false);
    let anchor = random_pair(3, &mut rng);
    let mut prev = f64::INFINITY;
    for l in [1e1, 1e3, 1e5] {
        let sol = solve_p42(&anchor, &set, &v, &ch, l, &InnerSolverConfig::default()).unwrap();
        let d = fro_norm(&(&sol.pair.sigma_z - &anchor.sigma_z));
        assert!(d <= prev + 1e-12);
        prev = d;
    }
    assert!(prev < 1e-3);
}

#[test]
fn no_signal_returns_anchor() {
    let cfg = small_config(3, 6, 2);
    let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 4, 0.0, 0.0);
    let v = PhaseVector::random(6, &mut rng);
    let set = EveSampleSet::draw(cfg.dims, 4, 7, false);
    let anchor = CovariancePair::new(identity(3).scale(0.1), identity(3).scale(0.2));
    let sol = solve_p42(&anchor, &set, &v, &ch, 1.0, &InnerSolverConfig::default()).unwrap();
    assert!(sol.pair.sub(&anchor).norm() < 1e-12);
}

/// Plain projected gradient with a fixed conservative step, run long.
fn plain_pg_oracle(model: &SampleModel, sur: &Surrogate, start: &CovariancePair, step: f64, iters: usize) -> f64 {
    let mut x = start.clone();
    let mut best = sur.value(model, &x);
    for _ in 0..iters {
        let g = sur.grad(model, &x);
        x = prox(&x, &g, step, false).unwrap().pair;
        best = best.min(sur.value(model, &x));
    }
    best
}

#[test]
fn subproblem_matches_plain_gradient_oracle() {
    let cfg = small_config(2, 4, 2);
    for seed in 0..5 {
        let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 10 + seed, 4.0, 2.0);
        let v = PhaseVector::random(4, &mut rng);
        let set = EveSampleSet::draw(cfg.dims, 10, seed, false);
        let model = SampleModel::new(&ch, &v, &set).unwrap();
        let anchor = random_pair(2, &mut rng);
        let l = 0.5;
        let sur = Surrogate::new(&model, &anchor, l, false);
        let sol = solve_p42(&anchor, &set, &v, &ch, l, &InnerSolverConfig::default()).unwrap();
        let a = lis_secrecy::rates::cascaded(&ch.g, &ch.h_r, &v);
        let curv = 2.0 * (ch.rho_r * a.norm_squared()).powi(2) / std::f64::consts::LN_2 + 2.0 * l;
        let oracle = plain_pg_oracle(&model, &sur, &anchor, 1.0 / curv, 400_000);
        assert!((sol.objective - oracle).abs() < 1e-5, "seed {seed}: {} vs {oracle}", sol.objective);
        sol.pair.validate().unwrap();
    }
}

#[test]
fn runs_are_deterministic_and_monotone() {
    let cfg = small_config(4, 8, 3);
    for seed in 0..4 {
        let (ch, mut rng) = channel(&cfg, ObjectiveId::C3, seed);
        let v0 = PhaseVector::random(8, &mut rng);
        let conf = SaaConfig { k_samples: 64, max_outer: 40, ..Default::default() };
        let a = saa_optimize(&conf, &ch, &v0, &half_split(4), &mut rng_from_seed(seed)).unwrap();
        let b = saa_optimize(&conf, &ch, &v0, &half_split(4), &mut rng_from_seed(seed)).unwrap();
        assert_eq!(a.trace.objectives(), b.trace.objectives());
        assert_eq!(a.pair, b.pair);
        let obj = a.trace.objectives();
        assert!(obj.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{obj:?}");
        a.pair.validate().unwrap();
    }
}

#[test]
fn stationary_at_convergence() {
    let cfg = small_config(4, 8, 3);
    let (ch, mut rng) = channel(&cfg, ObjectiveId::C3, 77);
    let v0 = PhaseVector::random(8, &mut rng);
    let set = EveSampleSet::draw(cfg.dims, 64, 1, false);
    let conf = SaaConfig { k_samples: 64, max_outer: 300, objective_tol: 1e-10, ..Default::default() };
    let st = saa_optimize_with(&conf, &ch, &v0, &half_split(4), &set, &NoClock).unwrap();
    let model = SampleModel::new(&ch, &st.v, &set).unwrap();
    let g = model.grad(&st.pair, true).norm();
    let gap = stationarity_gap(&model, &st.pair, 1.0, false).unwrap();
    assert!(gap < 1e-4 * (1.0 + g), "gap {gap}, grad {g}");
}

#[test]
fn message_only_mode_agrees_with_rank_one_solver() {
    let cfg = small_config(4, 8, 3);
    for seed in 0..3 {
        let (ch, mut rng) = channel(&cfg, ObjectiveId::C1, 40 + seed);
        let v0 = PhaseVector::random(8, &mut rng);
        let conf = SaaConfig { k_samples: 2000, objective: ObjectiveId::C1, ..Default::default() };
        let st = saa_optimize(&conf, &ch, &v0, &CovariancePair::isotropic(4), &mut rng).unwrap();
        assert!(st.pair.sigma_z_is_zero());
        let alt = alt_opt_c1(&ch, &v0, 200, 1e-10).unwrap();
        let val = EveSampleSet::draw(cfg.dims, 20_000, 999 + seed, false);
        let m1 = SampleModel::new(&ch, &st.v, &val).unwrap().estimate(&st.pair);
        let m2 = SampleModel::new(&ch, &alt.v, &val).unwrap().estimate(&CovariancePair::new(alt.sigma_s(), zeros(4)));
        let tol = (0.05 * m2.value.abs()).max(3.0 * (m1.std_error.powi(2) + m2.std_error.powi(2)).sqrt());
        assert!((m1.value - m2.value).abs() <= tol, "seed {seed}: {} vs {}", m1.value, m2.value);
    }
}

#[test]
fn rejects_noise_in_message_only_mode_and_bad_config() {
    let cfg = small_config(3, 6, 2);
    let (ch, mut rng) = channel(&cfg, ObjectiveId::C1, 0);
    let v0 = PhaseVector::random(6, &mut rng);
    let conf = SaaConfig { k_samples: 8, objective: ObjectiveId::C1, ..Default::default() };
    assert!(saa_optimize(&conf, &ch, &v0, &half_split(3), &mut rng).is_err());
    let bad = SaaConfig { k_samples: 0, ..conf };
    assert!(saa_optimize(&bad, &ch, &v0, &CovariancePair::isotropic(3), &mut rng).is_err());
    let infeasible = CovariancePair::new(identity(3), zeros(3));
    assert!(saa_optimize(&conf, &ch, &v0, &infeasible, &mut rng).is_err());
}
