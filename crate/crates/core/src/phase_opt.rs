//! Phase-shift optimization for a fixed covariance pair.
//!
//! With `D = diag(h_r)` the legitimate-link SINR is the ratio of two
//! quadratic forms in `v`:
//!
//! ```text
//! Y1 = rho_r D^H G^H Σ_s G D,   Y2 = I / N_I + rho_r D^H G^H Σ_z G D,
//! v^H Y1 v / v^H Y2 v   (using |v|^2 = N_I)
//! ```
//!
//! [`optimize_phases`] maximizes this ratio by bisection on the ratio level
//! `mu`, where each level is tested by minimizing `v^H (mu Y2 - Y1) v` over
//! unit-modulus vectors with majorization–minimization ([`mm_step`]).

use alloc::vec::Vec;

use crate::error::{mismatch, Result};
use crate::linalg::{abs, arg, cis, quad_form, CMat, CVec, HermEig, C64};
use crate::model::ChannelRealization;
use crate::rates::{CovariancePair, PhaseVector};

/// Entries of `beta` (or `c`) below this magnitude keep their previous phase.
pub const PHASE_TIE: f64 = 1e-14;
/// Inner majorization–minimization cap per ratio level.
pub const MM_MAX_ITERS: usize = 500;
/// Relative change of the inner objective treated as converged.
pub const MM_REL_TOL: f64 = 1e-10;
/// Cap on bisection steps over the ratio level.
pub const BISECTION_MAX: usize = 100;

/// Numerator and denominator forms of the SINR ratio.
#[derive(Debug, Clone)]
pub struct FractionalInstance {
    pub y1: CMat,
    pub y2: CMat,
}

impl FractionalInstance {
    pub fn ratio(&self, v: &PhaseVector) -> f64 {
        quad_form(&self.y1, &v.v) / quad_form(&self.y2, &v.v)
    }
}

/// Outcome of [`optimize_phases`].
#[derive(Debug, Clone)]
pub struct PhaseOptReport {
    pub v: PhaseVector,
    pub mu_final: f64,
    /// Best ratio after each bisection step, starting with the initial ratio.
    pub ratio_trace: Vec<f64>,
    /// Inner iterations spent at each bisection step.
    pub inner_iterations: Vec<usize>,
    /// Bracket `(mu_min, mu_max)` from the eigenvalue bounds.
    pub bracket: (f64, f64),
    /// Set when an iteration cap ended the search.
    pub capped: bool,
}

impl PhaseOptReport {
    pub fn final_ratio(&self) -> f64 {
        self.ratio_trace.last().copied().unwrap_or(0.0)
    }
}

/// `Y1`, `Y2` for the given covariances and the known receiver channel.
pub fn build_fractional(pair: &CovariancePair, ch: &ChannelRealization) -> Result<FractionalInstance> {
    let d = ch.dims();
    if pair.sigma_s.nrows() != d.n_t || pair.sigma_z.nrows() != d.n_t || ch.h_r.len() != d.n_i {
        return Err(mismatch("covariances or receiver channel do not match G"));
    }
    let mut m = ch.g.clone();
    for (k, mut col) in m.column_iter_mut().enumerate() {
        col *= ch.h_r[k];
    }
    let mh = m.adjoint();
    let y1 = crate::linalg::hermitian_part(&(&mh * &pair.sigma_s * &m).scale(ch.rho_r));
    let mut y2 = crate::linalg::hermitian_part(&(&mh * &pair.sigma_z * &m).scale(ch.rho_r));
    let inv_n = 1.0 / d.n_i as f64;
    for k in 0..d.n_i {
        y2[(k, k)] += C64::new(inv_n, 0.0);
    }
    Ok(FractionalInstance { y1, y2 })
}

/// One majorization–minimization step for `min v^H Φ v` given `lambda >= λ_max(Φ)`.
pub fn mm_step_with(v: &PhaseVector, phi: &CMat, lambda: f64) -> PhaseVector {
    let beta: CVec = phi * &v.v - &v.v * C64::new(lambda, 0.0);
    let out = CVec::from_fn(v.len(), |k, _| if abs(beta[k]) < PHASE_TIE { v.v[k] } else { cis(arg(beta[k])) });
    PhaseVector { v: out }
}

/// `v'_k = exp(j arg β_k)` with `β = (Φ - λ_max(Φ) I) v`.
pub fn mm_step(v: &PhaseVector, phi: &CMat) -> PhaseVector {
    mm_step_with(v, phi, HermEig::new(phi).max())
}

/// Runs [`mm_step_with`] until the objective settles; returns the iterate and step count.
fn mm_loop(v0: &PhaseVector, phi: &CMat, lambda: f64) -> (PhaseVector, usize) {
    let mut v = v0.clone();
    let mut q = quad_form(phi, &v.v);
    for it in 1..=MM_MAX_ITERS {
        let next = mm_step_with(&v, phi, lambda);
        let qn = quad_form(phi, &next.v);
        let change = (q - qn).abs();
        v = next;
        let settled = change <= MM_REL_TOL * q.abs().max(qn.abs()).max(f64::MIN_POSITIVE);
        q = qn;
        if settled {
            return (v, it);
        }
    }
    (v, MM_MAX_ITERS)
}

/// Maximizes `v^H Y1 v / v^H Y2 v` starting from `v0`.
///
/// The returned ratio is never below the ratio of `v0`. If `Y1 = 0` there is
/// nothing to optimize and `v0` is returned with `mu_final = 0`.
pub fn optimize_phases(pair: &CovariancePair, ch: &ChannelRealization, v0: &PhaseVector, tol: f64) -> Result<PhaseOptReport> {
    let inst = build_fractional(pair, ch)?;
    if v0.len() != inst.y1.nrows() {
        return Err(mismatch("initial phases do not match N_I"));
    }
    Ok(optimize_fractional(&inst, v0, tol, pair.sigma_z_is_zero()))
}

/// [`optimize_phases`] on a prebuilt instance. `y2_scaled_identity` marks
/// `Y2 = I / N_I`, which lets `λ_max` come from the spectrum of `Y1`.
pub fn optimize_fractional(inst: &FractionalInstance, v0: &PhaseVector, tol: f64, y2_scaled_identity: bool) -> PhaseOptReport {
    let n = inst.y1.nrows();
    let r0 = inst.ratio(v0);
    if inst.y1.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return PhaseOptReport {
            v: v0.clone(),
            mu_final: 0.0,
            ratio_trace: alloc::vec![r0],
            inner_iterations: Vec::new(),
            bracket: (0.0, 0.0),
            capped: false,
        };
    }
    let e1 = HermEig::new(&inst.y1);
    let e2 = HermEig::new(&inst.y2);
    let mu_hi0 = e1.max() / e2.min();
    let mu_lo0 = (e1.min() / e2.max()).max(0.0);
    let mut mu_lo = mu_lo0.max(r0);
    let mut mu_hi = mu_hi0.max(mu_lo);
    let mut best = v0.clone();
    let mut best_ratio = r0;
    let mut trace = alloc::vec![r0];
    let mut inner = Vec::new();
    let mut mu = 0.5 * (mu_lo + mu_hi);
    let mut capped = true;
    for _ in 0..BISECTION_MAX {
        mu = 0.5 * (mu_lo + mu_hi);
        let phi = inst.y2.scale(mu) - &inst.y1;
        let lambda = if y2_scaled_identity { mu / n as f64 - e1.min() } else { HermEig::new(&phi).max() };
        let (v, its) = mm_loop(&best, &phi, lambda);
        inner.push(its);
        let den = quad_form(&inst.y2, &v.v);
        let f = quad_form(&inst.y1, &v.v) - mu * den;
        let r = inst.ratio(&v);
        if r > best_ratio {
            best_ratio = r;
            best = v;
        }
        trace.push(best_ratio);
        if f.abs() <= tol * den {
            capped = false;
            break;
        }
        if f > 0.0 {
            mu_lo = mu.max(r);
        } else {
            mu_hi = mu;
        }
        mu_lo = mu_lo.max(best_ratio);
        if mu_hi - mu_lo <= tol * mu_hi {
            capped = false;
            break;
        }
    }
    PhaseOptReport { v: best, mu_final: mu, ratio_trace: trace, inner_iterations: inner, bracket: (mu_lo0, mu_hi0), capped }
}

/// `v_k = exp(j arg c_k)` with `c = diag(h_r^H) G^H ω`, maximizing `|v^H c|`.
pub fn closed_form_phase(omega: &CVec, ch: &ChannelRealization) -> PhaseVector {
    let c = closed_form_target(omega, ch);
    PhaseVector { v: c.map(|z| if abs(z) < PHASE_TIE { C64::new(1.0, 0.0) } else { cis(arg(z)) }) }
}

/// `c = diag(h_r^H) G^H ω`.
pub fn closed_form_target(omega: &CVec, ch: &ChannelRealization) -> CVec {
    let gw = ch.g.adjoint() * omega;
    gw.zip_map(&ch.h_r, |x, h| h.conj() * x)
}
