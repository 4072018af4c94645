//! Projections onto the covariance feasible set
//! `X2 = {(Σ_s, Σ_z) : Σ_s ⪰ 0, Σ_z ⪰ 0, Tr(Σ_s + Σ_z) ≤ 1}`.
//!
//! The proximal step `argmin <G, X> + |X - Σ|^2 / (2r)` over `X2` is the
//! Euclidean projection of `Σ - rG`. Its KKT conditions shift both blocks by
//! the same multiple of the identity, so one eigendecomposition per block
//! plus a scalar search over the shift solves it exactly.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_deviation, zeros, CMat, HermEig};
use crate::rates::{CovariancePair, GradientPair, HERMITIAN_TOL};

/// Proximal point, its trace multiplier and the scaled step `(Σ - Σ⁺)/r`.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub pair: CovariancePair,
    /// Multiplier of the trace constraint.
    pub multiplier: f64,
    pub gap: GradientPair,
    /// Bisection steps spent on the multiplier.
    pub bisection_steps: usize,
}

fn check_hermitian(h: &CMat) -> Result<()> {
    let scale = 1.0 + h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(h: &CMat) -> Result<CMat> {
    check_hermitian(h)?;
    Ok(HermEig::new(h).rebuild(|x| x.max(0.0)))
}

fn clipped_trace(values: &[f64], tau: f64) -> f64 {
    values.iter().map(|&e| (e - tau).max(0.0)).sum()
}

/// Smallest `tau >= 0` with `sum max(e - tau, 0) <= 1`, found by bisection on
/// a geometrically grown bracket and then polished on the active set.
fn trace_shift(values: &[f64], hi_start: f64) -> (f64, usize) {
    if clipped_trace(values, 0.0) <= 1.0 {
        return (0.0, 0);
    }
    let mut hi = hi_start.max(f64::MIN_POSITIVE);
    while clipped_trace(values, hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut steps = 0;
    while steps < 200 && hi - lo > 1e-15 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if clipped_trace(values, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    // On the active set {e > tau} the trace is affine in tau.
    let active: Vec<f64> = values.iter().copied().filter(|&e| e > hi).collect();
    let mut tau = hi;
    if !active.is_empty() {
        let exact = (active.iter().sum::<f64>() - 1.0) / active.len() as f64;
        let still_active = active.iter().all(|&e| e > exact);
        let consistent = values.iter().filter(|&&e| e <= hi).all(|&e| e <= exact);
        if exact >= 0.0 && still_active && consistent {
            tau = exact;
        }
    }
    (tau, steps)
}

/// Euclidean projection of a list of Hermitian blocks onto
/// `{all blocks ⪰ 0, sum of traces <= 1}`; returns the blocks and the shift.
pub fn project_blocks(blocks: &[&CMat], hi_scale: f64) -> Result<(Vec<CMat>, f64, usize)> {
    let eigs: Vec<HermEig> = blocks
        .iter()
        .map(|b| {
            check_hermitian(b)?;
            Ok(HermEig::new(b))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = eigs.iter().flat_map(|e| e.values.iter().copied()).collect();
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (tau, steps) = trace_shift(&values, top * hi_scale);
    let out = eigs.iter().map(|e| e.rebuild(|x| (x - tau).max(0.0))).collect();
    Ok((out, tau, steps))
}

/// Projection of `(H_s, H_z)` onto `X2`.
pub fn project_x2(h_s: &CMat, h_z: &CMat) -> Result<CovariancePair> {
    let (mut out, _, _) = project_blocks(&[h_s, h_z], 1.0)?;
    let z = out.pop().unwrap_or_else(|| zeros(h_s.nrows()));
    let s = out.pop().unwrap_or_else(|| zeros(h_s.nrows()));
    Ok(CovariancePair::new(s, z))
}

/// `Σ⁺ = [Σ - r(G + λ̄ I)]⁺` on both blocks with the smallest feasible `λ̄ >= 0`.
pub fn prox_pair(current: &CovariancePair, grads: &GradientPair, r: f64) -> Result<ProxResult> {
    prox_impl(current, grads, r, false)
}

/// Same step with `Σ_z` held at zero (the no-artificial-noise feasible set).
pub fn prox_message_only(current: &CovariancePair, grads: &GradientPair, r: f64) -> Result<ProxResult> {
    prox_impl(current, grads, r, true)
}

/// Dispatches on whether `Σ_z` is pinned.
pub fn prox(current: &CovariancePair, grads: &GradientPair, r: f64, pin_z: bool) -> Result<ProxResult> {
    prox_impl(current, grads, r, pin_z)
}

fn prox_impl(current: &CovariancePair, grads: &GradientPair, r: f64, pin_z: bool) -> Result<ProxResult> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("step size must be positive"));
    }
    let ys = &current.sigma_s - grads.g_s.scale(r);
    let n = ys.nrows();
    // Bracket start for λ̄ is max|eig|/r; in units of the shift tau = r λ̄ that is max|eig|.
    let (pair, tau, steps) = if pin_z {
        let (mut out, tau, steps) = project_blocks(&[&ys], 1.0)?;
        (CovariancePair::new(out.pop().unwrap_or_else(|| zeros(n)), zeros(n)), tau, steps)
    } else {
        let yz = &current.sigma_z - grads.g_z.scale(r);
        let (mut out, tau, steps) = project_blocks(&[&ys, &yz], 1.0)?;
        let z = out.pop().unwrap_or_else(|| zeros(n));
        let s = out.pop().unwrap_or_else(|| zeros(n));
        (CovariancePair::new(s, z), tau, steps)
    };
    let gap = GradientPair {
        g_s: (&current.sigma_s - &pair.sigma_s).scale(1.0 / r),
        g_z: (&current.sigma_z - &pair.sigma_z).scale(1.0 / r),
    };
    Ok(ProxResult { pair, multiplier: tau / r, gap, bisection_steps: steps })
}

/// `(Σ - prox(Σ, G, r)) / r`.
pub fn projected_gradient_gap(current: &CovariancePair, grads: &GradientPair, r: f64) -> Result<GradientPair> {
    Ok(prox_pair(current, grads, r)?.gap)
}
