//! Stochastic projected gradient with a growing batch.
//!
//! Iteration `t` draws `⌈t^α⌉` fresh eavesdropper samples, takes one
//! proximal step on the covariances with the sampled gradient of `-C̄`, and
//! then re-optimizes the phases.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::powf;
use crate::model::{sample_psd_with_trace, ChannelRealization, EveSampleSet, ObjectiveId};
use crate::phase_opt::optimize_phases;
use crate::psd_geometry::prox;
use crate::rates::{CovariancePair, GradientPair, PhaseVector, RateEstimate, SampleModel};
use crate::trace::{Clock, NoClock, SolverTrace, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpgConfig {
    /// Batch growth exponent, strictly above 1.
    pub alpha: f64,
    pub n_iters: usize,
    /// Step size; `None` means `1 / L` with `L` from [`estimate_l`].
    pub r: Option<f64>,
    pub l_est_trials: usize,
    /// Samples shared by the trial points of [`estimate_l`].
    pub l_est_samples: usize,
    pub seed: u64,
    pub objective: ObjectiveId,
    /// Size of the fixed monitoring set; 0 disables monitoring.
    pub validation_samples: usize,
    pub phase_tol: f64,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self {
            alpha: 1.3,
            n_iters: 60,
            r: None,
            l_est_trials: 8,
            l_est_samples: 200,
            seed: 0,
            objective: ObjectiveId::C3,
            validation_samples: 10_000,
            phase_tol: 1e-8,
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha must exceed 1"));
        }
        if self.n_iters == 0 {
            return Err(invalid("n_iters must be positive"));
        }
        if let Some(r) = self.r {
            if !(r > 0.0) || !r.is_finite() {
                return Err(invalid("step size must be positive"));
            }
        }
        if self.l_est_trials < 2 || self.l_est_samples == 0 {
            return Err(invalid("estimating L needs at least two trial points and one sample"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpgState {
    pub pair: CovariancePair,
    pub v: PhaseVector,
    /// Index of the next iteration (starts at 1).
    pub t: usize,
    pub r: f64,
    pub l_est: f64,
    pub gap_norms: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub objective_estimates: Vec<RateEstimate>,
    pub trace: SolverTrace,
}

impl SpgState {
    pub fn new(pair: CovariancePair, v: PhaseVector, r: f64, l_est: f64) -> Self {
        Self {
            pair,
            v,
            t: 1,
            r,
            l_est,
            gap_norms: Vec::new(),
            batch_sizes: Vec::new(),
            objective_estimates: Vec::new(),
            trace: SolverTrace::default(),
        }
    }

    /// Total eavesdropper samples drawn so far.
    pub fn samples_used(&self) -> usize {
        self.batch_sizes.iter().sum()
    }
}

/// Smallest integer `n >= t^alpha`.
pub fn batch_size(t: usize, alpha: f64) -> Result<usize> {
    if t == 0 {
        return Err(invalid("iteration index starts at 1"));
    }
    if !(alpha > 1.0) {
        return Err(invalid("alpha must exceed 1"));
    }
    let x = powf(t as f64, alpha);
    let nearest = libm::round(x);
    if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        // t^alpha may be an exact integer that rounding pushed just above it.
        let n = nearest as u64;
        if libm::trunc(alpha) == alpha {
            let exact = (t as u64).checked_pow(alpha as u32);
            if exact == Some(n) {
                return Ok(n as usize);
            }
        } else if exact_rational_power(t as u64, alpha, n) {
            return Ok(n as usize);
        }
    }
    Ok(libm::ceil(x) as usize)
}

/// Checks `t^(p/q) == n` as `t^p == n^q` for a small-denominator `alpha`.
fn exact_rational_power(t: u64, alpha: f64, n: u64) -> bool {
    for q in 2u32..=16 {
        let p = alpha * q as f64;
        if (p - libm::round(p)).abs() > 1e-12 {
            continue;
        }
        let p = libm::round(p) as u32;
        return match (t.checked_pow(p), n.checked_pow(q)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
    }
    false
}

/// Trial points for Lipschitz estimation: each block has trace at most 1/2,
/// so every mix of blocks from two points is feasible. With `pinned` the
/// noise block is zero and the message block may use the full budget.
fn trial_points<R: Rng + ?Sized>(n_t: usize, trials: usize, pinned: bool, rng: &mut R) -> Vec<CovariancePair> {
    (0..trials)
        .map(|_| {
            if pinned {
                let ts = rng.gen::<f64>();
                return CovariancePair::new(sample_psd_with_trace(n_t, ts, rng), crate::linalg::zeros(n_t));
            }
            let ts = 0.5 * rng.gen::<f64>();
            let tz = 0.5 * rng.gen::<f64>();
            CovariancePair::new(sample_psd_with_trace(n_t, ts, rng), sample_psd_with_trace(n_t, tz, rng))
        })
        .collect()
}

/// Twice the largest gradient-difference ratio among random feasible points.
///
/// Besides whole pairs, points that differ in only one block are compared so
/// that curvature confined to one block is not diluted.
pub fn estimate_l_with<R, F>(n_t: usize, trials: usize, rng: &mut R, grad: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&CovariancePair) -> GradientPair,
{
    estimate_l_impl(n_t, trials, false, rng, grad)
}

/// [`estimate_l_with`] restricted to points with `Σ_z = 0`.
pub fn estimate_l_pinned_with<R, F>(n_t: usize, trials: usize, rng: &mut R, grad: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&CovariancePair) -> GradientPair,
{
    estimate_l_impl(n_t, trials, true, rng, grad)
}

fn estimate_l_impl<R, F>(n_t: usize, trials: usize, pinned: bool, rng: &mut R, mut grad: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&CovariancePair) -> GradientPair,
{
    let points = trial_points(n_t, trials.max(2), pinned, rng);
    let mut best = 0.0f64;
    let mut probe = |a: &CovariancePair, b: &CovariancePair, ga: &GradientPair, gb: &GradientPair| {
        let dx = a.sub(b).norm();
        if dx > 0.0 {
            let dg = GradientPair { g_s: &ga.g_s - &gb.g_s, g_z: &ga.g_z - &gb.g_z }.norm();
            best = best.max(dg / dx);
        }
    };
    let grads: Vec<GradientPair> = points.iter().map(&mut grad).collect();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            probe(&points[i], &points[j], &grads[i], &grads[j]);
            if pinned {
                continue;
            }
            let mixed = CovariancePair::new(points[i].sigma_s.clone(), points[j].sigma_z.clone());
            let gm = grad(&mixed);
            probe(&points[i], &mixed, &grads[i], &gm);
            probe(&points[j], &mixed, &grads[j], &gm);
        }
    }
    (2.0 * best).max(1e-12)
}

/// Lipschitz estimate of the sampled gradient of `C̄` for the phases `v`.
pub fn estimate_l<R: Rng + ?Sized>(ch: &ChannelRealization, v: &PhaseVector, trials: usize, rng: &mut R) -> Result<f64> {
    estimate_l_sized(ch, v, trials, SpgConfig::default().l_est_samples, rng)
}

/// [`estimate_l`] with an explicit sample count.
pub fn estimate_l_sized<R: Rng + ?Sized>(ch: &ChannelRealization, v: &PhaseVector, trials: usize, samples: usize, rng: &mut R) -> Result<f64> {
    if trials < 2 {
        return Err(invalid("estimating L needs at least two trial points"));
    }
    estimate_l_for(ch, v, ObjectiveId::C3, trials, samples, rng)
}

/// Lipschitz estimate for the gradient actually used on `objective`.
///
/// Objectives without artificial noise only see `Σ_z = 0`, so their trial
/// points and gradients are restricted to the message block.
pub fn estimate_l_for<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    v: &PhaseVector,
    objective: ObjectiveId,
    trials: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials < 2 {
        return Err(invalid("estimating L needs at least two trial points"));
    }
    let set = EveSampleSet::draw_from(ch.dims(), samples.max(1), rng, 0, ch.receiver_iid);
    let model = SampleModel::new(ch, v, &set)?;
    let n_t = ch.dims().n_t;
    Ok(if objective.uses_an() {
        estimate_l_with(n_t, trials, rng, |p| model.grad(p, true))
    } else {
        estimate_l_pinned_with(n_t, trials, rng, |p| model.grad(p, false))
    })
}

/// Descent gradients `(G_s, G_z)` of `-C̄` on one batch.
pub fn stochastic_grads(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization, batch: &EveSampleSet) -> Result<GradientPair> {
    if batch.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(SampleModel::new(ch, v, batch)?.grad(pair, true).neg())
}

/// One iteration: fresh batch, proximal covariance step, phase update.
pub fn spg_step<R: Rng + ?Sized>(state: &SpgState, config: &SpgConfig, ch: &ChannelRealization, rng: &mut R) -> Result<SpgState> {
    let pinned = !config.objective.uses_an();
    let b = batch_size(state.t, config.alpha)?;
    let batch = EveSampleSet::draw_from(ch.dims(), b, rng, 0, ch.receiver_iid);
    let model = SampleModel::new(ch, &state.v, &batch)?;
    let grads = model.grad(&state.pair, !pinned).neg();
    let step = prox(&state.pair, &grads, state.r, pinned)?;
    let mut next = state.clone();
    next.pair = step.pair;
    if config.objective.known_receiver() {
        next.v = optimize_phases(&next.pair, ch, &state.v, config.phase_tol)?.v;
    }
    next.gap_norms.push(step.gap.norm());
    next.batch_sizes.push(b);
    next.t += 1;
    Ok(next)
}

/// Outcome of [`spg_optimize`] together with the monitoring set.
#[derive(Debug, Clone)]
pub struct SpgRun {
    pub state: SpgState,
    pub validation: Option<EveSampleSet>,
}

/// Runs `n_iters` steps from `init`, seeded by `config.seed`.
pub fn spg_optimize(config: &SpgConfig, ch: &ChannelRealization, init: (&CovariancePair, &PhaseVector)) -> Result<SpgRun> {
    spg_optimize_with(config, ch, init, &NoClock)
}

pub fn spg_optimize_with(config: &SpgConfig, ch: &ChannelRealization, init: (&CovariancePair, &PhaseVector), clock: &dyn Clock) -> Result<SpgRun> {
    config.validate()?;
    let (pair0, v0) = init;
    pair0.validate()?;
    if !config.objective.uses_an() && !pair0.sigma_z_is_zero() {
        return Err(invalid("objectives without artificial noise need Σ_z = 0"));
    }
    let mut est_rng = crate::rng::child_rng(config.seed, &[1]);
    let mut step_rng = crate::rng::child_rng(config.seed, &[2]);
    let l_est = estimate_l_for(ch, v0, config.objective, config.l_est_trials, config.l_est_samples, &mut est_rng)?;
    let r = config.r.unwrap_or(1.0 / l_est);
    let validation = (config.validation_samples > 0).then(|| {
        EveSampleSet::draw(ch.dims(), config.validation_samples, crate::rng::derive_seed(config.seed, &[3]), ch.receiver_iid)
    });
    let mut monitor = match &validation {
        Some(set) => Some(SampleModel::new(ch, v0, set)?),
        None => None,
    };
    let mut state = SpgState::new(pair0.clone(), v0.clone(), r, l_est);
    let mut first = TraceRow::new(0, f64::NAN, clock.elapsed_ms());
    first.lipschitz = Some(l_est);
    if let Some(m) = &monitor {
        let est = m.estimate(&state.pair);
        first.objective = est.value;
        state.objective_estimates.push(est);
    }
    state.trace.push(first);
    for _ in 0..config.n_iters {
        state = spg_step(&state, config, ch, &mut step_rng)?;
        let mut row = TraceRow::new(state.t - 1, f64::NAN, 0.0);
        row.batch_size = state.batch_sizes.last().copied();
        row.gap_norm = state.gap_norms.last().copied();
        if let (Some(m), Some(set)) = (monitor.as_mut(), validation.as_ref()) {
            if config.objective.known_receiver() {
                m.set_phases(ch, &state.v, set)?;
            }
            let est = m.estimate(&state.pair);
            row.objective = est.value;
            state.objective_estimates.push(est);
        }
        row.wall_ms = clock.elapsed_ms();
        state.trace.push(row);
    }
    Ok(SpgRun { state, validation })
}

/// Deterministic gap `(Σ - prox(Σ, -∇C̄, r)) / r` on a fixed sample set.
pub fn deterministic_gap(pair: &CovariancePair, v: &PhaseVector, ch: &ChannelRealization, samples: &EveSampleSet, r: f64, pinned: bool) -> Result<f64> {
    let model = SampleModel::new(ch, v, samples)?;
    let g = model.grad(pair, !pinned).neg();
    Ok(prox(pair, &g, r, pinned)?.gap.norm())
}
