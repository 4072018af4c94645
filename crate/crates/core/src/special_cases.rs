//! Rank-one message covariance without artificial noise.
//!
//! With `Σ_s = ωω^H` and a known receiver, the objective depends on `ω`
//! only through `z = |ω^H h|^2 / |h|^2` and `φ = ω^H G G^H ω`:
//!
//! ```text
//! R(v, z) = log2(1 + rho_r z |h(v)|^2) - F1(rho_e φ(v, z), N_e) / ln 2
//! ```
//!
//! where `φ(v, z)` is the smallest `ω^H G G^H ω` among unit `ω` with the given
//! alignment `z`. [`PhiSolver`] computes it exactly, [`newton_z`] searches
//! `z`, and [`alt_opt_c1`] alternates with the closed-form phase update.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{abs, arg, cis, fro_norm, identity, log2_1p, outer, quad_form, sqrt, vec_norm, CMat, CVec, HermEig, C64, LN_2};
use crate::model::{sample_iid_cn, ChannelRealization};
use crate::phase_opt::closed_form_phase;
use crate::quadrature::f1;
use crate::rates::{cascaded, eve_nats_grad_from_b, CovRep, PhaseVector};

/// Minimizer of `ω^H G G^H ω` at a fixed alignment `z`.
#[derive(Debug, Clone)]
pub struct PhiResult {
    pub value: f64,
    pub omega: CVec,
    pub z: f64,
    /// Set when `h(v) = 0`, in which case `z` does not constrain `ω`.
    pub degenerate: bool,
}

/// Precomputed eigenstructure of `G G^H` on the orthogonal complement of `h(v)`.
#[derive(Debug, Clone)]
pub struct PhiSolver {
    q: CMat,
    h_unit: Option<CVec>,
    h_norm_sq: f64,
    basis: CMat,
    evals: Vec<f64>,
    coeffs: CVec,
}

impl PhiSolver {
    pub fn new(v: &PhaseVector, ch: &ChannelRealization) -> Self {
        let q = &ch.g * ch.g.adjoint();
        let h = cascaded(&ch.g, &ch.h_r, v);
        let h_norm = vec_norm(&h);
        let n = q.nrows();
        if !(h_norm > 0.0) {
            let e = HermEig::new(&q);
            let coeffs = CVec::zeros(n);
            return Self { q, h_unit: None, h_norm_sq: 0.0, basis: e.vectors, evals: e.values, coeffs };
        }
        let h_unit = h.unscale(h_norm);
        let proj = identity(n) - outer(&h_unit);
        // The complement of h is the unit eigenspace of the projector.
        let pe = HermEig::new(&proj);
        let u = pe.vectors.columns(1, n - 1).into_owned();
        let qc = u.adjoint() * &q * &u;
        let qe = HermEig::new(&crate::linalg::hermitian_part(&qc));
        let basis = &u * &qe.vectors;
        let coeffs = basis.adjoint() * (&q * &h_unit);
        Self { q, h_unit: Some(h_unit), h_norm_sq: h_norm * h_norm, basis, evals: qe.values, coeffs }
    }

    /// `|h(v)|^2`.
    pub fn h_norm_sq(&self) -> f64 {
        self.h_norm_sq
    }

    /// `G G^H`.
    pub fn gram(&self) -> &CMat {
        &self.q
    }

    pub fn solve(&self, z: f64) -> Result<PhiResult> {
        if !(0.0..=1.0).contains(&z) {
            return Err(invalid("z must lie in [0, 1]"));
        }
        let Some(h_unit) = &self.h_unit else {
            let omega = self.basis.column(0).into_owned();
            return Ok(PhiResult { value: self.evals[0], omega, z, degenerate: true });
        };
        let a: Vec<f64> = self.evals.iter().map(|d| (1.0 - z) * d).collect();
        let beta: CVec = self.coeffs.scale(sqrt(z * (1.0 - z)));
        let x = trust_region_unit(&a, &beta);
        let u = &self.basis * &x;
        let cu = self.coeffs.dotc(&x);
        let psi = if abs(cu) > 0.0 { core::f64::consts::PI + arg(cu) } else { 0.0 };
        let mut omega = h_unit * (cis(psi) * sqrt(z)) + u.scale(sqrt(1.0 - z));
        let norm = vec_norm(&omega);
        omega.unscale_mut(norm);
        let value = quad_form(&self.q, &omega);
        Ok(PhiResult { value, omega, z, degenerate: false })
    }
}

/// Minimizes `x^H diag(a) x - 2 Re(b^H x)` over unit vectors.
fn trust_region_unit(a: &[f64], b: &CVec) -> CVec {
    let n = a.len();
    let (imin, a_min) = a.iter().copied().enumerate().fold((0, f64::INFINITY), |m, (i, x)| if x < m.1 { (i, x) } else { m });
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let bn = vec_norm(b);
    let bottom: Vec<usize> = (0..n).filter(|&i| a[i] - a_min <= 1e-12 * scale).collect();
    let b_bottom: f64 = bottom.iter().map(|&i| b[i].norm_sqr()).sum();
    if b_bottom == 0.0 {
        // Possible hard case: the linear term misses the bottom eigenspace.
        let s_hat: f64 = (0..n).filter(|i| !bottom.contains(i)).map(|i| b[i].norm_sqr() / ((a[i] - a_min) * (a[i] - a_min))).sum();
        if s_hat <= 1.0 {
            let mut x = CVec::from_fn(n, |i, _| if bottom.contains(&i) { C64::new(0.0, 0.0) } else { b[i] / (a[i] - a_min) });
            x[imin] = C64::new(sqrt(1.0 - s_hat), 0.0);
            return x;
        }
    }
    let secular = |d: f64| -> f64 { (0..n).map(|i| b[i].norm_sqr() / ((a[i] - a_min + d) * (a[i] - a_min + d))).sum() };
    let (mut lo, mut hi) = (0.0f64, bn.max(f64::MIN_POSITIVE));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = CVec::from_fn(n, |i, _| b[i] / (a[i] - a_min + hi));
    let xn = vec_norm(&x);
    if xn > 0.0 {
        x.unscale_mut(xn);
    } else {
        x[imin] = C64::new(1.0, 0.0);
    }
    x
}

/// `φ(v, z)` and its minimizer.
pub fn solve_phi(v: &PhaseVector, z: f64, ch: &ChannelRealization) -> Result<PhiResult> {
    PhiSolver::new(v, ch).solve(z)
}

fn objective_from(solver: &PhiSolver, z: f64, ch: &ChannelRealization) -> Result<f64> {
    let phi = solver.solve(z)?;
    let n_e = ch.dims().n_e;
    Ok(log2_1p(ch.rho_r * z * solver.h_norm_sq()) - f1(ch.rho_e * phi.value.max(0.0), n_e)? / LN_2)
}

/// Reduced objective `R(v, z)` in bits/s/Hz, evaluated by quadrature.
pub fn objective_c1_vz(v: &PhaseVector, z: f64, ch: &ChannelRealization) -> Result<f64> {
    objective_from(&PhiSolver::new(v, ch), z, ch)
}

/// Exact rate of `Σ_s = ωω^H` with phases `v` (known receiver, no noise).
pub fn rank_one_rate(omega: &CVec, v: &PhaseVector, ch: &ChannelRealization) -> Result<f64> {
    let h = cascaded(&ch.g, &ch.h_r, v);
    let rx = h.dotc(omega).norm_sqr();
    let phi = vec_norm(&(ch.g.adjoint() * omega));
    Ok(log2_1p(ch.rho_r * rx) - f1(ch.rho_e * phi * phi, ch.dims().n_e)? / LN_2)
}

/// Step of the central differences in [`newton_z`].
pub const NEWTON_FD_STEP: f64 = 1e-4;
/// Points of the initial scan over `[0, 1]` in [`newton_z`].
pub const NEWTON_SCAN: usize = 41;

/// Search statistics of [`newton_z_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub z: f64,
    pub value: f64,
    pub newton_steps: usize,
    pub used_golden: bool,
}

/// Maximizer of `R(v, ·)` on `[0, 1]`; never worse than `z0`.
pub fn newton_z(v: &PhaseVector, ch: &ChannelRealization, z0: f64, tol: f64) -> Result<f64> {
    Ok(newton_z_report(&PhiSolver::new(v, ch), ch, z0, tol)?.z)
}

/// Safeguarded Newton search with numerical derivatives and a golden-section fallback.
pub fn newton_z_report(solver: &PhiSolver, ch: &ChannelRealization, z0: f64, tol: f64) -> Result<NewtonReport> {
    let z0 = z0.clamp(0.0, 1.0);
    let f = |z: f64| objective_from(solver, z, ch);
    let mut best_z = z0;
    let mut best_f = f(z0)?;
    let mut grid_idx = None;
    for k in 0..NEWTON_SCAN {
        let z = k as f64 / (NEWTON_SCAN - 1) as f64;
        let fz = f(z)?;
        if fz > best_f {
            best_f = fz;
            best_z = z;
            grid_idx = Some(k);
        }
    }
    let spacing = 1.0 / (NEWTON_SCAN - 1) as f64;
    let (mut lo, mut hi) = match grid_idx {
        Some(k) => ((k as f64 - 1.0) * spacing, (k as f64 + 1.0) * spacing),
        None => (best_z - spacing, best_z + spacing),
    };
    lo = lo.max(0.0);
    hi = hi.min(1.0);
    let mut z = best_z;
    let mut fz = best_f;
    let mut steps = 0;
    let mut golden = false;
    for _ in 0..60 {
        let (d1, d2) = derivatives(&f, z)?;
        let projected = if (z >= 1.0 && d1 > 0.0) || (z <= 0.0 && d1 < 0.0) { 0.0 } else { d1 };
        if projected.abs() < tol || hi - lo < 1e-8 {
            break;
        }
        if d1 > 0.0 {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        let cand = if d2 < 0.0 { z - d1 / d2 } else { f64::NAN };
        if !(cand >= lo && cand <= hi) {
            golden = true;
            break;
        }
        let fc = f(cand)?;
        if fc < fz {
            golden = true;
            break;
        }
        steps += 1;
        let moved = (cand - z).abs();
        z = cand;
        fz = fc;
        if moved < 1e-12 {
            break;
        }
    }
    if golden {
        let (gz, gf) = golden_section(&f, lo, hi)?;
        if gf > fz {
            z = gz;
            fz = gf;
        }
    }
    let polish = NEWTON_FD_STEP.min(hi - lo);
    let (pz, pf) = golden_section(&f, (z - polish).max(0.0), (z + polish).min(1.0))?;
    if pf > fz {
        z = pz;
        fz = pf;
    }
    for end in [0.0, 1.0] {
        let fe = f(end)?;
        if fe > fz {
            z = end;
            fz = fe;
        }
    }
    if fz < best_f {
        z = best_z;
        fz = best_f;
    }
    Ok(NewtonReport { z, value: fz, newton_steps: steps, used_golden: golden })
}

fn derivatives(f: &impl Fn(f64) -> Result<f64>, z: f64) -> Result<(f64, f64)> {
    // The stencil stays inside [0, 1]; near an end it shrinks, and at an end it turns one-sided.
    let room = z.min(1.0 - z);
    let (c, h) = if room >= NEWTON_FD_STEP {
        (z, NEWTON_FD_STEP)
    } else if room > 1e-9 {
        (z, 0.5 * room)
    } else {
        let h = NEWTON_FD_STEP;
        (z.clamp(h, 1.0 - h), h)
    };
    let (fm, f0, fp) = (f(c - h)?, f(c)?, f(c + h)?);
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    // Shift the first derivative from the stencil centre back to z.
    Ok((d1 + d2 * (z - c), d2))
}

fn golden_section(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > 1e-12 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let z = 0.5 * (a + b);
    let fz = f(z)?;
    Ok(if fz >= fc.max(fd) { (z, fz) } else if fc >= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone)]
pub struct AltOptReport {
    pub omega: CVec,
    pub v: PhaseVector,
    pub z: f64,
    /// Objective after each round, starting with the value before the first phase update.
    pub objective_trace: Vec<f64>,
    pub newton_steps: Vec<usize>,
    pub converged: bool,
}

impl AltOptReport {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `Σ_s = ωω^H`.
    pub fn sigma_s(&self) -> CMat {
        outer(&self.omega)
    }
}

/// Alternates the `(z, ω)` update with the closed-form phase update.
pub fn alt_opt_c1(ch: &ChannelRealization, v0: &PhaseVector, max_iters: usize, tol: f64) -> Result<AltOptReport> {
    if v0.len() != ch.dims().n_i {
        return Err(crate::error::mismatch("initial phases do not match N_I"));
    }
    if v0.modulus_error() > 1e-9 {
        return Err(invalid("initial phases must have unit modulus"));
    }
    let mut v = v0.clone();
    let mut solver = PhiSolver::new(&v, ch);
    let first = newton_z_report(&solver, ch, 0.5, 1e-10)?;
    let mut z = first.z;
    let mut omega = solver.solve(z)?.omega;
    let mut trace = alloc::vec![rank_one_rate(&omega, &v, ch)?];
    let mut newton_steps = alloc::vec![first.newton_steps];
    let mut converged = false;
    for _ in 0..max_iters {
        let prev = trace[trace.len() - 1];
        v = closed_form_phase(&omega, ch);
        solver = PhiSolver::new(&v, ch);
        let z_here = if solver.h_norm_sq() > 0.0 {
            (cascaded(&ch.g, &ch.h_r, &v).dotc(&omega).norm_sqr() / solver.h_norm_sq()).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let rep = newton_z_report(&solver, ch, z_here, 1e-10)?;
        newton_steps.push(rep.newton_steps);
        let cand = solver.solve(rep.z)?.omega;
        let cand_rate = rank_one_rate(&cand, &v, ch)?;
        let kept_rate = rank_one_rate(&omega, &v, ch)?;
        if cand_rate >= kept_rate {
            omega = cand;
            z = rep.z;
            trace.push(cand_rate);
        } else {
            z = z_here;
            trace.push(kept_rate);
        }
        if trace[trace.len() - 1] - prev < tol {
            converged = true;
            break;
        }
    }
    Ok(AltOptReport { omega, v, z, objective_trace: trace, newton_steps, converged })
}

/// `log2(1 + a/(b + t)) - log2(1 + a/(1 + t))` for a single-antenna eavesdropper.
pub fn an_gain_ne1(a: f64, b: f64, t_hat: f64) -> Result<f64> {
    if !(a >= 0.0) || !(t_hat >= 0.0) {
        return Err(invalid("a and t_hat must be nonnegative"));
    }
    if !(b > 0.0 && b <= 1.0) {
        return Err(invalid("b must lie in (0, 1]"));
    }
    Ok(log2_1p(a / (b + t_hat)) - log2_1p(a / (1.0 + t_hat)))
}

/// Monte Carlo KKT matrix with per-eigenvalue standard errors.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub a: CMat,
    /// Ascending eigenvalues of `a`.
    pub eigenvalues: Vec<f64>,
    /// Standard error of each eigenvalue's Rayleigh quotient estimate.
    pub std_errors: Vec<f64>,
}

impl KktReport {
    /// Eigenvalues above `k` standard errors.
    pub fn significant_positive(&self, k: f64) -> usize {
        self.eigenvalues.iter().zip(&self.std_errors).filter(|(l, s)| **l > k * **s).count()
    }

    /// `|A Σ - Σ A| / (|A| |Σ|)`.
    pub fn commutation_residual(&self, sigma_s: &CMat) -> f64 {
        let c = &self.a * sigma_s - sigma_s * &self.a;
        fro_norm(&c) / (fro_norm(&self.a) * fro_norm(sigma_s)).max(f64::MIN_POSITIVE)
    }
}

/// `A = rho_r a a^H / (1 + rho_r a^H Σ a) - E[rho_e B (I + rho_e B^H Σ B)^{-1} B^H]`, `B = G H_e`.
pub fn kkt_matrix_a<R: Rng + Clone>(sigma_s: &CMat, v: &PhaseVector, ch: &ChannelRealization, n_mc_samples: usize, rng: &mut R) -> Result<CMat> {
    Ok(kkt_report(sigma_s, v, ch, n_mc_samples, rng)?.a)
}

/// [`kkt_matrix_a`] plus eigenvalue standard errors from a second pass over the same draws.
pub fn kkt_report<R: Rng + Clone>(sigma_s: &CMat, v: &PhaseVector, ch: &ChannelRealization, n_mc_samples: usize, rng: &mut R) -> Result<KktReport> {
    crate::rates::CovariancePair::new(sigma_s.clone(), crate::linalg::zeros(sigma_s.nrows())).validate()?;
    if n_mc_samples < 2 {
        return Err(invalid("need at least two Monte Carlo samples"));
    }
    let d = ch.dims();
    let a_vec = cascaded(&ch.g, &ch.h_r, v);
    let first = outer(&a_vec).scale(ch.rho_r / (1.0 + ch.rho_r * quad_form(sigma_s, &a_vec)));
    let rep = CovRep::new(sigma_s);
    let mut replay = rng.clone();
    let mut mean = crate::linalg::zeros(d.n_t);
    for _ in 0..n_mc_samples {
        let h = sample_iid_cn(d.n_i, d.n_e, rng);
        mean += eve_nats_grad_from_b(&(&ch.g * h), &rep, ch.rho_e).1;
    }
    let k = n_mc_samples as f64;
    let a = crate::linalg::hermitian_part(&(first - mean.scale(1.0 / k)));
    let eig = HermEig::new(&a);
    let mut s1 = alloc::vec![0.0; d.n_t];
    let mut s2 = alloc::vec![0.0; d.n_t];
    for _ in 0..n_mc_samples {
        let h = sample_iid_cn(d.n_i, d.n_e, &mut replay);
        let m = eve_nats_grad_from_b(&(&ch.g * h), &rep, ch.rho_e).1;
        for j in 0..d.n_t {
            let q = quad_form(&m, &eig.vectors.column(j).into_owned());
            s1[j] += q;
            s2[j] += q * q;
        }
    }
    let std_errors = (0..d.n_t)
        .map(|j| {
            let m = s1[j] / k;
            sqrt(((s2[j] / k - m * m) * k / (k - 1.0)).max(0.0) / k)
        })
        .collect();
    Ok(KktReport { a, eigenvalues: eig.values, std_errors })
}
