#![allow(dead_code)]

use lis_secrecy::linalg::{identity, CMat, CVec, C64};
use lis_secrecy::model::{sample_channels, sample_iid_cn, sample_psd_with_trace, ChannelConfig, Dims};
use lis_secrecy::rng::{rng_from_seed, SimRng};
use lis_secrecy::{ChannelRealization, CovariancePair, ObjectiveId};
use rand::Rng;

pub fn small_config(n_t: usize, n_i: usize, n_e: usize) -> ChannelConfig {
    ChannelConfig { dims: Dims { n_t, n_i, n_e }, ..Default::default() }
}

pub fn channel(cfg: &ChannelConfig, objective: ObjectiveId, seed: u64) -> (ChannelRealization, SimRng) {
    let mut rng = rng_from_seed(seed);
    let ch = sample_channels(cfg, objective, &mut rng).unwrap();
    (ch, rng)
}

/// Channel with SNRs overridden so that both links matter at small dimensions.
pub fn scaled_channel(cfg: &ChannelConfig, objective: ObjectiveId, seed: u64, rho_r: f64, rho_e: f64) -> (ChannelRealization, SimRng) {
    let (mut ch, rng) = channel(cfg, objective, seed);
    ch.rho_r = rho_r;
    ch.rho_e = rho_e;
    (ch, rng)
}

/// Feasible pair with total trace drawn in (0, 1).
pub fn random_pair<R: Rng>(n: usize, rng: &mut R) -> CovariancePair {
    let total: f64 = rng.gen_range(0.05..0.95);
    let split: f64 = rng.gen_range(0.1..0.9);
    CovariancePair::new(sample_psd_with_trace(n, total * split, rng), sample_psd_with_trace(n, total * (1.0 - split), rng))
}

/// Strictly positive definite feasible pair.
pub fn interior_pair<R: Rng>(n: usize, rng: &mut R) -> CovariancePair {
    let p = random_pair(n, rng);
    let eps = 0.02 / n as f64;
    CovariancePair::new(p.sigma_s.scale(0.9) + identity(n).scale(eps), p.sigma_z.scale(0.9) + identity(n).scale(eps))
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let a = sample_iid_cn(n, n, rng);
    (&a + a.adjoint()).scale(0.5)
}

/// `ln det(I + rho B^H X B)` through a plain LU determinant.
pub fn logdet_oracle(b: &CMat, x: &CMat, rho: f64) -> f64 {
    let m = identity(b.ncols()) + (b.adjoint() * x * b).scale(rho);
    m.determinant().re.ln()
}

/// Direct evaluation of the sample-average objective in bits with the known receiver.
pub fn c_bar_oracle(pair: &CovariancePair, a: &CVec, rho_r: f64, bs: &[CMat], rho_e: f64) -> f64 {
    let s = pair.sum();
    let q = |x: &CMat| (a.adjoint() * x * a)[(0, 0)].re;
    let rx = ((1.0 + rho_r * q(&s)) / (1.0 + rho_r * q(&pair.sigma_z))).ln();
    let eve: f64 = bs.iter().map(|b| logdet_oracle(b, &s, rho_e) - logdet_oracle(b, &pair.sigma_z, rho_e)).sum::<f64>() / bs.len() as f64;
    (rx - eve) / std::f64::consts::LN_2
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Euclidean projection onto `X2` by Dykstra's alternating projections
/// between the two PSD cones and the trace half-space.
pub fn dykstra_projection(ys: &CMat, yz: &CMat, iters: usize) -> CovariancePair {
    let n = ys.nrows();
    let psd = |m: &CMat| -> CMat {
        let e = m.clone().symmetric_eigen();
        let d = e.eigenvalues.map(|x| re(x.max(0.0)));
        &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
    };
    let half = |s: &CMat, z: &CMat| -> (CMat, CMat) {
        let tr = s.trace().re + z.trace().re;
        if tr <= 1.0 {
            (s.clone(), z.clone())
        } else {
            let shift = identity(n).scale((tr - 1.0) / (2.0 * n as f64));
            (s - &shift, z - &shift)
        }
    };
    let (mut xs, mut xz) = (ys.clone(), yz.clone());
    let (mut ps, mut pz) = (CMat::zeros(n, n), CMat::zeros(n, n));
    let (mut qs, mut qz) = (CMat::zeros(n, n), CMat::zeros(n, n));
    for _ in 0..iters {
        let (as_, az) = (&xs + &ps, &xz + &pz);
        let (bs, bz) = (psd(&as_), psd(&az));
        ps = as_ - &bs;
        pz = az - &bz;
        let (cs, cz) = (&bs + &qs, &bz + &qz);
        let (ds, dz) = half(&cs, &cz);
        qs = cs - &ds;
        qz = cz - &dz;
        xs = ds;
        xz = dz;
    }
    CovariancePair::new(psd(&xs), psd(&xz))
}
