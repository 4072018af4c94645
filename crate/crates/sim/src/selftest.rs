//! Fast invariant checks run by the `selftest` subcommand.

use lis_secrecy::linalg::{fro_norm, identity, inner, CMat};
use lis_secrecy::model::{sample_channels, sample_iid_cn, sample_psd_with_trace, ChannelConfig, Dims};
use lis_secrecy::psd_geometry::{projected_gradient_gap, prox_pair};
use lis_secrecy::quadrature::f1_with_derivs;
use lis_secrecy::rates::{eve_logdet_grad, lipschitz_bound_sample, SampleModel};
use lis_secrecy::rng::{rng_from_seed, SimRng};
use lis_secrecy::saa::{saa_optimize, SaaConfig};
use lis_secrecy::{CovariancePair, EveSampleSet, GradientPair, ObjectiveId, PhaseVector};
use rand::Rng;

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn small_channel(seed: u64) -> (lis_secrecy::ChannelRealization, SimRng) {
    let cfg = ChannelConfig { dims: Dims { n_t: 3, n_i: 6, n_e: 2 }, ..Default::default() };
    let mut rng = rng_from_seed(seed);
    let mut ch = sample_channels(&cfg, ObjectiveId::C3, &mut rng).expect("default channel config is valid");
    ch.rho_r = 2.0;
    ch.rho_e = 1.5;
    (ch, rng)
}

fn random_pair(n: usize, rng: &mut SimRng) -> CovariancePair {
    let total: f64 = rng.gen_range(0.1..0.9);
    CovariancePair::new(sample_psd_with_trace(n, 0.6 * total, rng), sample_psd_with_trace(n, 0.4 * total, rng))
}

fn random_grads(n: usize, rng: &mut SimRng) -> GradientPair {
    let mut herm = || {
        let a = sample_iid_cn(n, n, rng);
        (&a + a.adjoint()).scale(0.5)
    };
    GradientPair { g_s: herm(), g_z: herm() }
}

fn gradient_check() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let (ch, mut rng) = small_channel(seed);
        let v = PhaseVector::random(6, &mut rng);
        let set = EveSampleSet::draw(ch.dims(), 8, seed, false);
        let model = SampleModel::new(&ch, &v, &set).expect("sizes agree");
        let base = random_pair(3, &mut rng);
        let pair = CovariancePair::new(&base.sigma_s + identity(3).scale(0.02), &base.sigma_z + identity(3).scale(0.02));
        let g = model.grad(&pair, true);
        let e = random_grads(3, &mut rng);
        let h = 1e-5;
        let shift = |t: f64| CovariancePair::new(&pair.sigma_s + e.g_s.scale(t), &pair.sigma_z + e.g_z.scale(t));
        let fd = (model.value(&shift(h)) - model.value(&shift(-h))) / (2.0 * h);
        let an = inner(&g.g_s, &e.g_s) + inner(&g.g_z, &e.g_z);
        worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
    }
    check("gradient vs finite differences", worst < 1e-4, format!("worst relative error {worst:.2e}"))
}

fn projection_check() -> Check {
    let mut rng = rng_from_seed(11);
    let mut worst = f64::NEG_INFINITY;
    let mut infeasible = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..5);
        let cur = random_pair(n, &mut rng);
        let (g1, g2) = (random_grads(n, &mut rng), random_grads(n, &mut rng));
        let r = rng.gen_range(0.05..2.0);
        let w1 = projected_gradient_gap(&cur, &g1, r).expect("hermitian input");
        let w2 = projected_gradient_gap(&cur, &g2, r).expect("hermitian input");
        let dw = GradientPair { g_s: &w1.g_s - &w2.g_s, g_z: &w1.g_z - &w2.g_z }.norm();
        let dg = GradientPair { g_s: &g1.g_s - &g2.g_s, g_z: &g1.g_z - &g2.g_z }.norm();
        worst = worst.max(dw - dg);
        if prox_pair(&cur, &g1, r).map(|p| p.pair.validate().is_err()).unwrap_or(true) {
            infeasible += 1;
        }
    }
    check("projection feasibility and nonexpansiveness", worst <= 1e-9 && infeasible == 0, format!("max excess {worst:.2e}, infeasible {infeasible}"))
}

fn lipschitz_check() -> Check {
    let mut violations = 0;
    for seed in 0..5 {
        let (ch, mut rng) = small_channel(100 + seed);
        let h = &EveSampleSet::draw(ch.dims(), 1, seed, false).samples[0];
        let bound = lipschitz_bound_sample(&ch.g, h, ch.rho_e, 2) / std::f64::consts::LN_2;
        for _ in 0..20 {
            let x: CMat = random_pair(3, &mut rng).sum();
            let y: CMat = random_pair(3, &mut rng).sum();
            let gx = eve_logdet_grad(&x, h, &ch.g, ch.rho_e).expect("hermitian");
            let gy = eve_logdet_grad(&y, h, &ch.g, ch.rho_e).expect("hermitian");
            if fro_norm(&(gx - gy)) > bound * fro_norm(&(&x - &y)) * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    check("eavesdropper gradient Lipschitz bound", violations == 0, format!("{violations} violations"))
}

fn quadrature_check() -> Check {
    let mut rng = rng_from_seed(7);
    let (t, n) = (0.8, 3usize);
    let draws = 20_000;
    let mc: f64 = (0..draws)
        .map(|_| {
            let x: f64 = sample_iid_cn(n, 1, &mut rng).iter().map(|z| z.norm_sqr()).sum();
            (t * x).ln_1p()
        })
        .sum::<f64>()
        / draws as f64;
    let q = f1_with_derivs(t, n).map(|r| r.0).unwrap_or(f64::NAN);
    let rel = (q - mc).abs() / mc;
    check("F1 quadrature vs Monte Carlo", rel < 0.02, format!("relative difference {rel:.2e}"))
}

fn monotone_check() -> Check {
    let (ch, mut rng) = small_channel(3);
    let v = PhaseVector::random(6, &mut rng);
    let cfg = SaaConfig { k_samples: 50, max_outer: 15, objective: ObjectiveId::C3, ..Default::default() };
    let pair0 = CovariancePair::new(identity(3).scale(1.0 / 6.0), identity(3).scale(1.0 / 6.0));
    match saa_optimize(&cfg, &ch, &v, &pair0, &mut rng) {
        Ok(state) => {
            let obj = state.trace.objectives();
            let worst = obj.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
            check("sample-average ascent is monotone", worst <= 1e-9, format!("largest decrease {worst:.2e}"))
        }
        Err(e) => check("sample-average ascent is monotone", false, e.to_string()),
    }
}

/// Runs every check in order.
pub fn run_selftest() -> Vec<Check> {
    vec![gradient_check(), projection_check(), lipschitz_check(), quadrature_check(), monotone_check()]
}
