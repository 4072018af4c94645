//! Secrecy objectives C1–C4, their sample averages and gradients.
//!
//! With `a = G Θ^H h_r` (the cascaded receiver channel) and `B = G H_e`,
//! one sample of the artificial-noise objective is
//!
//! ```text
//! log2(1 + ρ_r a^H Σ_s a / (1 + ρ_r a^H Σ_z a))
//!     - log2 det(I + ρ_e B^H (Σ_s + Σ_z) B) + log2 det(I + ρ_e B^H Σ_z B)
//! ```
//!
//! The phase shifts drop out of the eavesdropper term because `Θ^H H_e` has
//! the same distribution as `H_e`. Objectives without artificial noise are
//! the `Σ_z = 0` restriction; objectives with statistical receiver CSI
//! average the first term over i.i.d. receiver draws.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::linalg::Cholesky;
use rand::Rng;

use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{
    abs, arg, cis, fro_norm, hermitian_deviation, identity, ln, ln_1p, logdet_hpd, mean_se, outer, quad_form, sqrt,
    trace_re, zeros, CMat, CVec, HermEig, C64, LN_2,
};
use crate::model::{sample_iid_cn, ChannelRealization, EveSampleSet, ObjectiveId};

pub use crate::quadrature::{f1, f1_with_derivs};

/// Tolerance used when checking Hermitian symmetry of inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance used when checking positive semidefiniteness and the trace budget.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Message and artificial-noise covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub sigma_s: CMat,
    pub sigma_z: CMat,
}

impl CovariancePair {
    pub fn new(sigma_s: CMat, sigma_z: CMat) -> Self {
        Self { sigma_s, sigma_z }
    }

    pub fn zeros(n_t: usize) -> Self {
        Self { sigma_s: zeros(n_t), sigma_z: zeros(n_t) }
    }

    /// `Σ_s = I / N_t`, `Σ_z = 0`: full power spread evenly.
    pub fn isotropic(n_t: usize) -> Self {
        Self { sigma_s: identity(n_t).scale(1.0 / n_t as f64), sigma_z: zeros(n_t) }
    }

    pub fn n_t(&self) -> usize {
        self.sigma_s.nrows()
    }

    pub fn sum(&self) -> CMat {
        &self.sigma_s + &self.sigma_z
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.sigma_s) + trace_re(&self.sigma_z)
    }

    /// Frobenius norm of the stacked pair.
    pub fn norm(&self) -> f64 {
        let a = fro_norm(&self.sigma_s);
        let b = fro_norm(&self.sigma_z);
        sqrt(a * a + b * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { sigma_s: &self.sigma_s - &other.sigma_s, sigma_z: &self.sigma_z - &other.sigma_z }
    }

    /// Checks symmetry, semidefiniteness and the unit trace budget.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_t();
        for m in [&self.sigma_s, &self.sigma_z] {
            if m.nrows() != n || m.ncols() != n {
                return Err(mismatch("covariances must both be N_t x N_t"));
            }
            let dev = hermitian_deviation(m);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let lo = HermEig::new(m).min();
            if lo < -FEASIBILITY_TOL {
                return Err(Error::Infeasible(format!("minimum eigenvalue {lo:e}")));
            }
        }
        let tr = self.trace();
        if tr > 1.0 + FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!("trace {tr} exceeds 1")));
        }
        Ok(())
    }

    pub fn sigma_z_is_zero(&self) -> bool {
        self.sigma_z.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// Unit-modulus surface coefficients `v = diag(Θ^H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub v: CVec,
}

impl PhaseVector {
    pub fn ones(n_i: usize) -> Self {
        Self { v: CVec::from_element(n_i, C64::new(1.0, 0.0)) }
    }

    /// `v_k = e^{j theta_k}`.
    pub fn from_angles(theta: &[f64]) -> Self {
        Self { v: CVec::from_fn(theta.len(), |k, _| cis(theta[k])) }
    }

    /// Phases drawn uniformly on `[-pi, pi)`.
    pub fn random<R: Rng + ?Sized>(n_i: usize, rng: &mut R) -> Self {
        let pi = core::f64::consts::PI;
        Self { v: CVec::from_fn(n_i, |_, _| cis(rng.gen_range(-pi..pi))) }
    }

    /// Projects arbitrary entries onto the unit circle; zero entries become 1.
    pub fn from_directions(c: &CVec) -> Self {
        Self { v: c.map(|z| if abs(z) < 1e-300 { C64::new(1.0, 0.0) } else { cis(arg(z)) }) }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.v.iter().map(|&z| arg(z)).collect()
    }

    /// Largest deviation of `|v_k|` from one.
    pub fn modulus_error(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, &z| m.max((abs(z) - 1.0).abs()))
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self { v: &self.v * cis(phi) }
    }
}

/// Monte Carlo or exact rate value in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Hermitian gradient of a real objective with respect to `(Σ_s, Σ_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub g_s: CMat,
    pub g_z: CMat,
}

impl GradientPair {
    pub fn neg(&self) -> Self {
        Self { g_s: -&self.g_s, g_z: -&self.g_z }
    }

    pub fn norm(&self) -> f64 {
        let a = fro_norm(&self.g_s);
        let b = fro_norm(&self.g_z);
        sqrt(a * a + b * b)
    }

    pub fn inner(&self, d: &CovariancePair) -> f64 {
        crate::linalg::inner(&self.g_s, &d.sigma_s) + crate::linalg::inner(&self.g_z, &d.sigma_z)
    }
}

/// Cascaded receiver channel `G diag(h) v = G Θ^H h`.
pub fn cascaded(g: &CMat, h: &CVec, v: &PhaseVector) -> CVec {
    g * h.component_mul(&v.v)
}

fn check_dims(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization) -> Result<()> {
    let d = ch.dims();
    if pair.sigma_s.nrows() != d.n_t || pair.sigma_z.nrows() != d.n_t {
        return Err(mismatch(format!("covariances must be {}x{}", d.n_t, d.n_t)));
    }
    if v.len() != d.n_i || ch.h_r.len() != d.n_i {
        return Err(mismatch(format!("phase vector must have length {}", d.n_i)));
    }
    Ok(())
}

fn receiver_term_from(pair: &CovariancePair, a: &CVec, rho_r: f64) -> f64 {
    let num = rho_r * quad_form(&pair.sigma_s, a);
    let den = 1.0 + rho_r * quad_form(&pair.sigma_z, a);
    ln_1p(num / den) / LN_2
}

/// Legitimate-link term `log2(1 + num / den)` for the known receiver channel.
pub fn receiver_term(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization) -> Result<f64> {
    check_dims(pair, v, ch)?;
    Ok(receiver_term_from(pair, &cascaded(&ch.g, &ch.h_r, v), ch.rho_r))
}

/// Representation of a covariance argument of the eavesdropper log-det.
///
/// Semidefinite arguments are stored as a thin factor `F` with `X = F F^H`,
/// which makes rank-deficient iterates cheap. Indefinite arguments (finite
/// differences around a boundary point) fall back to the full matrix.
#[derive(Debug, Clone)]
pub(crate) enum CovRep {
    Factor(CMat),
    Full(CMat),
}

impl CovRep {
    pub(crate) fn new(x: &CMat) -> Self {
        if x.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            return Self::Factor(CMat::zeros(x.nrows(), 0));
        }
        let eig = HermEig::new(x);
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eig.min() < -1e-13 * scale {
            Self::Full(crate::linalg::hermitian_part(x))
        } else {
            Self::Factor(eig.psd_factor(1e-15))
        }
    }

    /// `F^H M` or `X`-dependent projection used by [`eve_nats_from_b`].
    fn is_zero(&self) -> bool {
        matches!(self, Self::Factor(f) if f.ncols() == 0)
    }
}

/// `ln det(I + rho B^H X B)`.
pub(crate) fn eve_nats_from_b(b: &CMat, x: &CovRep, rho: f64) -> f64 {
    if rho == 0.0 || x.is_zero() {
        return 0.0;
    }
    match x {
        CovRep::Factor(f) => {
            let c = f.adjoint() * b;
            small_logdet(&c, rho)
        }
        CovRep::Full(m) => {
            let k = b.adjoint() * m * b;
            let mat = identity(b.ncols()) + k.scale(rho);
            logdet_hpd(&crate::linalg::hermitian_part(&mat)).unwrap_or(f64::NAN)
        }
    }
}

/// `ln det(I + rho C C^H) = ln det(I + rho C^H C)` using the smaller side.
pub(crate) fn small_logdet(c: &CMat, rho: f64) -> f64 {
    let (r, e) = (c.nrows(), c.ncols());
    if r == 0 || e == 0 {
        return 0.0;
    }
    if r == 1 {
        let s: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        return ln_1p(rho * s);
    }
    let gram = if r <= e { c * c.adjoint() } else { c.adjoint() * c };
    let n = gram.nrows();
    let mat = identity(n) + gram.scale(rho);
    logdet_hpd(&mat).unwrap_or(f64::NAN)
}

/// Value (nats) and gradient (nats) of `ln det(I + rho B^H X B)` in `X`.
pub(crate) fn eve_nats_grad_from_b(b: &CMat, x: &CovRep, rho: f64) -> (f64, CMat) {
    let n_t = b.nrows();
    if rho == 0.0 {
        return (0.0, zeros(n_t));
    }
    let n_e = b.ncols();
    let k = match x {
        CovRep::Factor(f) if f.ncols() == 0 => {
            return (0.0, (b * b.adjoint()).scale(rho));
        }
        CovRep::Factor(f) => {
            let c = f.adjoint() * b;
            c.adjoint() * c
        }
        CovRep::Full(m) => b.adjoint() * m * b,
    };
    let mat = crate::linalg::hermitian_part(&(identity(n_e) + k.scale(rho)));
    let chol = match Cholesky::new(mat) {
        Some(c) => c,
        None => return (f64::NAN, CMat::from_element(n_t, n_t, C64::new(f64::NAN, 0.0))),
    };
    let l = chol.l();
    let value = (0..n_e).map(|i| 2.0 * ln(l[(i, i)].re)).sum();
    let w = l.solve_lower_triangular(&b.adjoint()).unwrap_or_else(|| CMat::zeros(n_e, n_t));
    let grad = (w.adjoint() * w).scale(rho);
    (value, grad)
}

/// `log2 det(I + rho_e H_e^H G^H Σ G H_e)`.
pub fn eve_logdet(sigma: &CMat, h_e_sample: &CMat, g: &CMat, rho_e: f64) -> Result<f64> {
    let dev = hermitian_deviation(sigma);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    if g.ncols() != h_e_sample.nrows() || sigma.nrows() != g.nrows() {
        return Err(mismatch("eavesdropper sample does not match G"));
    }
    let b = g * h_e_sample;
    Ok(eve_nats_from_b(&b, &CovRep::new(sigma), rho_e) / LN_2)
}

/// Gradient (bits) of [`eve_logdet`] with respect to `Σ`.
pub fn eve_logdet_grad(sigma: &CMat, h_e_sample: &CMat, g: &CMat, rho_e: f64) -> Result<CMat> {
    let dev = hermitian_deviation(sigma);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let b = g * h_e_sample;
    Ok(eve_nats_grad_from_b(&b, &CovRep::new(sigma), rho_e).1.scale(1.0 / LN_2))
}

/// One-sample value of the artificial-noise objective.
pub fn c3_integrand(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization, h_e_sample: &CMat) -> Result<f64> {
    let rx = receiver_term(pair, v, ch)?;
    let b = &ch.g * h_e_sample;
    let s = CovRep::new(&pair.sum());
    let z = CovRep::new(&pair.sigma_z);
    Ok(rx - (eve_nats_from_b(&b, &s, ch.rho_e) - eve_nats_from_b(&b, &z, ch.rho_e)) / LN_2)
}

/// Sample average of [`c3_integrand`] over a fixed sample set.
pub fn c_bar_3(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization, samples: &EveSampleSet) -> Result<f64> {
    Ok(c_bar_3_estimate(pair, v, ch, samples)?.value)
}

/// [`c_bar_3`] with its Monte Carlo standard error.
pub fn c_bar_3_estimate(
    pair: &CovariancePair,
    v: &PhaseVector,
    ch: &ChannelRealization,
    samples: &EveSampleSet,
) -> Result<RateEstimate> {
    check_dims(pair, v, ch)?;
    let model = SampleModel::new(ch, v, samples)?;
    Ok(model.estimate(pair))
}

/// Gradient of [`c_bar_3`] (ascent direction) in bits.
pub fn grad_c3(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization, samples: &EveSampleSet) -> Result<GradientPair> {
    check_dims(pair, v, ch)?;
    let model = SampleModel::new(ch, v, samples)?;
    Ok(model.grad(pair, true))
}

/// Appendix-style Lipschitz constant `(rho_e N_e |G H H^H G^H|_F)^2` of the
/// natural-log eavesdropper gradient on the semidefinite cone.
pub fn lipschitz_bound_sample(g: &CMat, h_e_sample: &CMat, rho_e: f64, n_e: usize) -> f64 {
    let b = g * h_e_sample;
    let t = rho_e * n_e as f64 * fro_norm(&(&b * b.adjoint()));
    t * t
}

/// Fixed-sample model of one objective, caching `G H_e` per sample.
///
/// For statistical receiver CSI each sample carries its own receiver draw;
/// otherwise every sample shares the known cascaded channel.
#[derive(Debug, Clone)]
pub struct SampleModel {
    receivers: Vec<CVec>,
    eve: Vec<CMat>,
    rho_r: f64,
    rho_e: f64,
    n_t: usize,
}

impl SampleModel {
    pub fn new(ch: &ChannelRealization, v: &PhaseVector, samples: &EveSampleSet) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let d = ch.dims();
        if v.len() != d.n_i {
            return Err(mismatch("phase vector length differs from N_I"));
        }
        if samples.samples.iter().any(|h| h.nrows() != d.n_i) {
            return Err(mismatch("eavesdropper samples must have N_I rows"));
        }
        let eve = samples.samples.iter().map(|h| &ch.g * h).collect();
        let mut model = Self { receivers: Vec::new(), eve, rho_r: ch.rho_r, rho_e: ch.rho_e, n_t: d.n_t };
        model.set_receivers(ch, v, samples)?;
        Ok(model)
    }

    /// Recomputes the cascaded receiver channels for new phases.
    pub fn set_phases(&mut self, ch: &ChannelRealization, v: &PhaseVector, samples: &EveSampleSet) -> Result<()> {
        self.set_receivers(ch, v, samples)
    }

    fn set_receivers(&mut self, ch: &ChannelRealization, v: &PhaseVector, samples: &EveSampleSet) -> Result<()> {
        self.receivers = if ch.receiver_iid {
            if samples.receivers.len() != samples.samples.len() {
                return Err(invalid("statistical receiver CSI needs one receiver draw per sample"));
            }
            samples.receivers.iter().map(|h| cascaded(&ch.g, h, v)).collect()
        } else {
            alloc::vec![cascaded(&ch.g, &ch.h_r, v)]
        };
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eve.is_empty()
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    fn receiver_for(&self, i: usize) -> &CVec {
        if self.receivers.len() == 1 {
            &self.receivers[0]
        } else {
            &self.receivers[i]
        }
    }

    /// Per-sample integrand values in bits.
    pub fn integrand_values(&self, pair: &CovariancePair) -> Vec<f64> {
        let s = CovRep::new(&pair.sum());
        let z = CovRep::new(&pair.sigma_z);
        let shared_rx = (self.receivers.len() == 1).then(|| receiver_term_from(pair, &self.receivers[0], self.rho_r));
        (0..self.eve.len())
            .map(|i| {
                let rx = shared_rx.unwrap_or_else(|| receiver_term_from(pair, self.receiver_for(i), self.rho_r));
                let b = &self.eve[i];
                rx - (eve_nats_from_b(b, &s, self.rho_e) - eve_nats_from_b(b, &z, self.rho_e)) / LN_2
            })
            .collect()
    }

    pub fn estimate(&self, pair: &CovariancePair) -> RateEstimate {
        let vals = self.integrand_values(pair);
        let (value, std_error) = mean_se(&vals);
        RateEstimate { value, std_error, n_samples: vals.len() }
    }

    pub fn value(&self, pair: &CovariancePair) -> f64 {
        self.estimate(pair).value
    }

    /// Mean legitimate-link value `log2(1 + rho_r a^H X a)`.
    pub fn receiver_log(&self, x: &CMat) -> f64 {
        let vals: Vec<f64> = self.receivers.iter().map(|a| ln_1p(self.rho_r * quad_form(x, a)) / LN_2).collect();
        crate::linalg::pairwise_sum(&vals) / vals.len() as f64
    }

    /// Gradient of [`Self::receiver_log`].
    pub fn receiver_grad(&self, x: &CMat) -> CMat {
        let mut acc = zeros(self.n_t);
        for a in &self.receivers {
            let w = self.rho_r / ((1.0 + self.rho_r * quad_form(x, a)) * LN_2);
            acc += outer(a).scale(w);
        }
        acc.scale(1.0 / self.receivers.len() as f64)
    }

    /// Mean eavesdropper log-det (bits) and its gradient.
    pub fn eve_value_grad(&self, x: &CMat) -> (f64, CMat) {
        let rep = CovRep::new(x);
        let mut acc = zeros(self.n_t);
        let mut vals = Vec::with_capacity(self.eve.len());
        for b in &self.eve {
            let (v, g) = eve_nats_grad_from_b(b, &rep, self.rho_e);
            vals.push(v);
            acc += g;
        }
        let k = self.eve.len() as f64;
        (crate::linalg::pairwise_sum(&vals) / (k * LN_2), acc.scale(1.0 / (k * LN_2)))
    }

    /// Mean eavesdropper log-det in bits.
    pub fn eve_value(&self, x: &CMat) -> f64 {
        let rep = CovRep::new(x);
        let vals: Vec<f64> = self.eve.iter().map(|b| eve_nats_from_b(b, &rep, self.rho_e)).collect();
        crate::linalg::pairwise_sum(&vals) / (vals.len() as f64 * LN_2)
    }

    /// Ascent gradient of the sample-average objective. With `with_z` unset
    /// the `Σ_z` block is left at zero.
    pub fn grad(&self, pair: &CovariancePair, with_z: bool) -> GradientPair {
        let s = pair.sum();
        let rs = self.receiver_grad(&s);
        let (_, es) = self.eve_value_grad(&s);
        let g_s = &rs - &es;
        let g_z = if with_z {
            let rz = self.receiver_grad(&pair.sigma_z);
            let (_, ez) = self.eve_value_grad(&pair.sigma_z);
            &g_s - rz + ez
        } else {
            zeros(self.n_t)
        };
        GradientPair { g_s, g_z }
    }
}

/// Monte Carlo estimate of objective `objective` with fresh channel draws.
///
/// Objectives without artificial noise require `Σ_z = 0`. With a known
/// receiver channel and `rho_e = 0` the result is exact.
pub fn secrecy_rate<R: Rng + ?Sized>(
    objective: ObjectiveId,
    pair: &CovariancePair,
    v: &PhaseVector,
    ch: &ChannelRealization,
    n_samples: usize,
    rng: &mut R,
) -> Result<RateEstimate> {
    check_dims(pair, v, ch)?;
    if !objective.uses_an() && !pair.sigma_z_is_zero() {
        return Err(invalid(format!("{objective} has no artificial noise but Σ_z is nonzero")));
    }
    if n_samples == 0 {
        return Err(Error::EmptySampleSet);
    }
    let d = ch.dims();
    if objective.known_receiver() && (ch.rho_e == 0.0 || trace_re(&pair.sigma_s) == 0.0) {
        let a = cascaded(&ch.g, &ch.h_r, v);
        let value = if trace_re(&pair.sigma_s) == 0.0 { 0.0 } else { receiver_term_from(pair, &a, ch.rho_r) };
        return Ok(RateEstimate { value, std_error: 0.0, n_samples });
    }
    let s_factor = factor_times(&pair.sum(), &ch.g);
    let z_factor = factor_times(&pair.sigma_z, &ch.g);
    let known_a = objective.known_receiver().then(|| cascaded(&ch.g, &ch.h_r, v));
    let mut vals = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let h = sample_iid_cn(d.n_i, d.n_e, rng);
        let rx = match &known_a {
            Some(a) => receiver_term_from(pair, a, ch.rho_r),
            None => {
                let h_r = sample_iid_cn(d.n_i, 1, rng).column(0).into_owned();
                receiver_term_from(pair, &cascaded(&ch.g, &h_r, v), ch.rho_r)
            }
        };
        let es = eve_nats_projected(&s_factor, &h, ch.rho_e);
        let ez = eve_nats_projected(&z_factor, &h, ch.rho_e);
        vals.push(rx - (es - ez) / LN_2);
    }
    let (value, std_error) = mean_se(&vals);
    Ok(RateEstimate { value, std_error, n_samples })
}

/// Either `F^H G` for a semidefinite factor, or the full matrix and `G`.
pub(crate) enum Projected {
    Thin(CMat),
    Full(CMat, CMat),
}

pub(crate) fn factor_times(x: &CMat, g: &CMat) -> Projected {
    match CovRep::new(x) {
        CovRep::Factor(f) => Projected::Thin(f.adjoint() * g),
        CovRep::Full(m) => Projected::Full(m, g.clone()),
    }
}

/// `ln det(I + rho H^H G^H X G H)` given a projection from [`factor_times`].
pub(crate) fn eve_nats_projected(p: &Projected, h: &CMat, rho: f64) -> f64 {
    match p {
        Projected::Thin(fg) => {
            if fg.nrows() == 0 || rho == 0.0 {
                0.0
            } else {
                small_logdet(&(fg * h), rho)
            }
        }
        Projected::Full(m, g) => eve_nats_from_b(&(g * h), &CovRep::Full(m.clone()), rho),
    }
}

/// Rank-one eavesdropper term `ln(1 + rho_e |H^H G^H w|^2)` for one draw.
pub fn eve_rank_one_nats(g_h_w: &CVec, h: &CMat, rho_e: f64) -> f64 {
    let y = h.adjoint() * g_h_w;
    ln_1p(rho_e * y.iter().map(|z| z.norm_sqr()).sum::<f64>())
}
