mod common;

use common::*;
use lis_secrecy::linalg::{fro_norm, identity, inner, CMat};
use lis_secrecy::model::EveSampleSet;
use lis_secrecy::psd_geometry::{prox_pair, projected_gradient_gap};
use lis_secrecy::rates::{cascaded, eve_logdet, eve_logdet_grad, lipschitz_bound_sample, SampleModel};
use lis_secrecy::rng::rng_from_seed;
use lis_secrecy::{CovariancePair, GradientPair, ObjectiveId, PhaseVector};
use proptest::prelude::*;

fn gradient_pair<R: rand::Rng>(n: usize, scale: f64, rng: &mut R) -> GradientPair {
    GradientPair { g_s: random_hermitian(n, rng).scale(scale), g_z: random_hermitian(n, rng).scale(scale) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sample_average_matches_determinant_oracle(seed in 0u64..10_000) {
        let cfg = small_config(3, 6, 2);
        let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, seed, 2.0, 1.5);
        let v = PhaseVector::random(6, &mut rng);
        let set = EveSampleSet::draw(cfg.dims, 8, seed ^ 0x55, false);
        let model = SampleModel::new(&ch, &v, &set).unwrap();
        let pair = random_pair(3, &mut rng);
        let bs: Vec<CMat> = set.samples.iter().map(|h| &ch.g * h).collect();
        let want = c_bar_oracle(&pair, &cascaded(&ch.g, &ch.h_r, &v), ch.rho_r, &bs, ch.rho_e);
        let got = model.value(&pair);
        prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn gradient_matches_central_differences(seed in 0u64..10_000) {
        let cfg = small_config(3, 6, 2);
        let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, seed, 2.0, 1.5);
        let v = PhaseVector::random(6, &mut rng);
        let set = EveSampleSet::draw(cfg.dims, 6, seed ^ 0xaa, false);
        let model = SampleModel::new(&ch, &v, &set).unwrap();
        let pair = interior_pair(3, &mut rng);
        let g = model.grad(&pair, true);
        let bs: Vec<CMat> = set.samples.iter().map(|h| &ch.g * h).collect();
        let a = cascaded(&ch.g, &ch.h_r, &v);
        let f = |p: &CovariancePair| c_bar_oracle(p, &a, ch.rho_r, &bs, ch.rho_e);
        let h = 1e-5;
        for block in 0..2 {
            let e = random_hermitian(3, &mut rng);
            let e = e.unscale(fro_norm(&e));
            let shift = |t: f64| if block == 0 {
                CovariancePair::new(&pair.sigma_s + e.scale(t), pair.sigma_z.clone())
            } else {
                CovariancePair::new(pair.sigma_s.clone(), &pair.sigma_z + e.scale(t))
            };
            let fd = (f(&shift(h)) - f(&shift(-h))) / (2.0 * h);
            let an = inner(if block == 0 { &g.g_s } else { &g.g_z }, &e);
            prop_assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "block {block}: fd {fd} vs {an}");
        }
    }

    #[test]
    fn prox_gap_inequality(seed in 0u64..100_000, r in 0.01f64..5.0, scale in 0.01f64..10.0) {
        let mut rng = rng_from_seed(seed);
        let n = 1 + (seed % 4) as usize;
        let cur = random_pair(n, &mut rng);
        let g = gradient_pair(n, scale, &mut rng);
        let w = projected_gradient_gap(&cur, &g, r).unwrap();
        let lhs = inner(&g.g_s, &w.g_s) + inner(&g.g_z, &w.g_z);
        let rhs = w.norm() * w.norm();
        prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs), "{lhs} < {rhs}");
    }

    #[test]
    fn prox_gap_is_nonexpansive(seed in 0u64..100_000, r in 0.01f64..5.0, scale in 0.01f64..10.0) {
        let mut rng = rng_from_seed(seed);
        let n = 1 + (seed % 4) as usize;
        let cur = random_pair(n, &mut rng);
        let g1 = gradient_pair(n, scale, &mut rng);
        let g2 = gradient_pair(n, scale, &mut rng);
        let w1 = projected_gradient_gap(&cur, &g1, r).unwrap();
        let w2 = projected_gradient_gap(&cur, &g2, r).unwrap();
        let dw = GradientPair { g_s: &w1.g_s - &w2.g_s, g_z: &w1.g_z - &w2.g_z }.norm();
        let dg = GradientPair { g_s: &g1.g_s - &g2.g_s, g_z: &g1.g_z - &g2.g_z }.norm();
        prop_assert!(dw <= dg + 1e-9, "{dw} > {dg}");
    }

    #[test]
    fn prox_is_feasible(seed in 0u64..100_000, r in 0.01f64..5.0, scale in 0.01f64..50.0) {
        let mut rng = rng_from_seed(seed);
        let n = 1 + (seed % 5) as usize;
        let cur = random_pair(n, &mut rng);
        let g = gradient_pair(n, scale, &mut rng);
        let res = prox_pair(&cur, &g, r).unwrap();
        prop_assert!(res.pair.validate().is_ok());
        prop_assert!(res.multiplier >= 0.0);
    }

    #[test]
    fn eve_gradient_lipschitz_bound(seed in 0u64..10_000) {
        let cfg = small_config(4, 8, 3);
        let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, seed, 1.0, 3.0);
        let set = EveSampleSet::draw(cfg.dims, 1, seed, false);
        let h = &set.samples[0];
        let bound = lipschitz_bound_sample(&ch.g, h, ch.rho_e, 3) / std::f64::consts::LN_2;
        let x = random_pair(4, &mut rng).sum();
        let y = random_pair(4, &mut rng).sum();
        let gx = eve_logdet_grad(&x, h, &ch.g, ch.rho_e).unwrap();
        let gy = eve_logdet_grad(&y, h, &ch.g, ch.rho_e).unwrap();
        prop_assert!(fro_norm(&(gx - gy)) <= bound * fro_norm(&(&x - &y)) * (1.0 + 1e-12));
    }
}

#[test]
fn prox_matches_alternating_projection_oracle() {
    let mut rng = rng_from_seed(2024);
    for _ in 0..20 {
        let cur = random_pair(2, &mut rng);
        let g = gradient_pair(2, 2.0, &mut rng);
        let r = 0.7;
        let res = prox_pair(&cur, &g, r).unwrap();
        let oracle = dykstra_projection(&(&cur.sigma_s - g.g_s.scale(r)), &(&cur.sigma_z - g.g_z.scale(r)), 20_000);
        let diff = res.pair.sub(&oracle).norm();
        assert!(diff < 1e-5, "prox differs from oracle by {diff}");
    }
}

#[test]
fn eve_logdet_matches_oracle_and_zero() {
    let cfg = small_config(3, 5, 2);
    let (ch, mut rng) = scaled_channel(&cfg, ObjectiveId::C3, 3, 1.0, 2.0);
    let set = EveSampleSet::draw(cfg.dims, 3, 9, false);
    for h in &set.samples {
        let x = random_pair(3, &mut rng).sum();
        let got = eve_logdet(&x, h, &ch.g, ch.rho_e).unwrap();
        let want = logdet_oracle(&(&ch.g * h), &x, ch.rho_e) / std::f64::consts::LN_2;
        assert!((got - want).abs() < 1e-12 * (1.0 + want));
        assert_eq!(eve_logdet(&identity(3).scale(0.0), h, &ch.g, ch.rho_e).unwrap(), 0.0);
    }
}
