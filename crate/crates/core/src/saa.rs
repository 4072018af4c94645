//! Sample-average approximation solver.
//!
//! A fixed set of eavesdropper draws turns the expectation into a finite
//! average `C̄`. Each outer iteration minimizes a convex majorizer of `-C̄`
//! around the current covariances (concave terms linearized, the convex
//! `-log det` in `Σ_z` bounded by a quadratic with weight `L_t`), adapts
//! `L_t` by halving and doubling until the majorizer step increases `C̄`,
//! and then re-optimizes the phases.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{fro_norm, inner, sqrt, CMat, LN_2};
use crate::model::{ChannelRealization, EveSampleSet, ObjectiveId};
use crate::phase_opt::optimize_phases;
use crate::psd_geometry::prox;
use crate::rates::{lipschitz_bound_sample, CovariancePair, GradientPair, PhaseVector, SampleModel};
use crate::trace::{Clock, NoClock, SolverTrace, TraceRow};

/// Settings of the convex subproblem solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    /// Relative objective decrease below which the solver stops.
    pub tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaConfig {
    pub k_samples: usize,
    /// Initial Lipschitz weight; `None` uses the mean per-sample bound.
    pub l0: Option<f64>,
    pub max_outer: usize,
    /// Relative gain treated as stalled (three stalls in a row stop the run).
    pub objective_tol: f64,
    pub inner: InnerSolverConfig,
    pub objective: ObjectiveId,
    /// Exit tolerance handed to the phase optimizer.
    pub phase_tol: f64,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            k_samples: 1000,
            l0: None,
            max_outer: 100,
            objective_tol: 1e-6,
            inner: InnerSolverConfig::default(),
            objective: ObjectiveId::C3,
            phase_tol: 1e-8,
        }
    }
}

impl SaaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_samples == 0 {
            return Err(invalid("k_samples must be at least 1"));
        }
        if let Some(l) = self.l0 {
            if !(l > 0.0) {
                return Err(invalid("l0 must be positive"));
            }
        }
        if self.max_outer == 0 || !(self.objective_tol > 0.0) {
            return Err(invalid("max_outer and objective_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SaaState {
    pub pair: CovariancePair,
    pub v: PhaseVector,
    pub l_t: f64,
    /// Current sample-average objective in bits/s/Hz.
    pub objective: f64,
    pub trace: SolverTrace,
    pub converged: bool,
    /// Outer iterations whose line search ran out of doublings.
    pub rejected_steps: usize,
}

/// Upper cap on the automatic initial Lipschitz weight.
pub const L0_CAP: f64 = 1e6;
/// Doublings allowed in one line search.
pub const MAX_DOUBLINGS: usize = 64;

/// Mean per-sample Lipschitz bound in bits, clipped to `[1e-9, L0_CAP]`.
pub fn default_l0(ch: &ChannelRealization, samples: &EveSampleSet) -> f64 {
    let n_e = ch.dims().n_e;
    let total: f64 = samples.samples.iter().map(|h| lipschitz_bound_sample(&ch.g, h, ch.rho_e, n_e)).sum();
    let mean = total / samples.len().max(1) as f64 / LN_2;
    mean.clamp(1e-9, L0_CAP)
}

/// Linearization of `-C̄` around an anchor point.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub a_s: CMat,
    pub a_z: CMat,
    pub anchor_z: CMat,
    pub l_t: f64,
    pub pinned: bool,
    constant: f64,
}

impl Surrogate {
    /// Builds the majorizer at `anchor`; with `pinned` the noise block is fixed at zero.
    pub fn new(model: &SampleModel, anchor: &CovariancePair, l_t: f64, pinned: bool) -> Self {
        let s = anchor.sum();
        let (_, eve_s) = model.eve_value_grad(&s);
        let a_s = eve_s.clone();
        let a_z = if pinned {
            CMat::zeros(s.nrows(), s.nrows())
        } else {
            let rz = model.receiver_grad(&anchor.sigma_z);
            let (_, eve_z) = model.eve_value_grad(&anchor.sigma_z);
            eve_s + rz - eve_z
        };
        let mut sur = Self { a_s, a_z, anchor_z: anchor.sigma_z.clone(), l_t, pinned, constant: 0.0 };
        let raw = sur.value(model, anchor);
        sur.constant = -model.value(anchor) - raw;
        sur
    }

    /// Surrogate value; equals `-C̄(anchor)` at the anchor.
    pub fn value(&self, model: &SampleModel, pair: &CovariancePair) -> f64 {
        let mut f = -model.receiver_log(&pair.sum()) + inner(&self.a_s, &pair.sigma_s) + self.constant;
        if !self.pinned {
            let d = fro_norm(&(&pair.sigma_z - &self.anchor_z));
            f += inner(&self.a_z, &pair.sigma_z) + self.l_t * d * d;
        }
        f
    }

    pub fn grad(&self, model: &SampleModel, pair: &CovariancePair) -> GradientPair {
        let rx = model.receiver_grad(&pair.sum());
        let g_s = &self.a_s - &rx;
        let g_z = if self.pinned {
            CMat::zeros(g_s.nrows(), g_s.nrows())
        } else {
            &self.a_z - &rx + (&pair.sigma_z - &self.anchor_z).scale(2.0 * self.l_t)
        };
        GradientPair { g_s, g_z }
    }

    /// Curvature bound of the smooth part near `pair`.
    fn local_curvature(&self, model: &SampleModel, pair: &CovariancePair) -> f64 {
        let s = pair.sum();
        let rx = model.receiver_grad(&s);
        // The rank-one Hessian of log(1 + a^H X a) has norm (grad norm)^2 * ln 2 per receiver.
        let g = fro_norm(&rx);
        let mut c = 2.0 * g * g * LN_2;
        if !self.pinned {
            c += 2.0 * self.l_t;
        }
        c.max(1e-12)
    }
}

/// Result of one convex subproblem solve.
#[derive(Debug, Clone)]
pub struct P42Solution {
    pub pair: CovariancePair,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Accelerated projected gradient with backtracking and function-value restart,
/// started at the anchor and monotone in the surrogate value.
pub fn solve_surrogate(model: &SampleModel, sur: &Surrogate, anchor: &CovariancePair, cfg: &InnerSolverConfig) -> Result<P42Solution> {
    let mut x = anchor.clone();
    let mut fx = sur.value(model, &x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut lk = sur.local_curvature(model, &x);
    let l_floor = if sur.pinned { 1e-12 } else { 2.0 * sur.l_t };
    let mut stalls = 0;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_iters {
        iterations = it;
        let fy = sur.value(model, &y);
        let gy = sur.grad(model, &y);
        let mut z;
        let mut fz;
        let mut guard = 0;
        loop {
            z = prox(&y, &gy, 1.0 / lk, sur.pinned)?.pair;
            fz = sur.value(model, &z);
            let d = z.sub(&y);
            let dn = d.norm();
            if fz <= fy + gy.inner(&d) + 0.5 * lk * dn * dn + 1e-15 * fy.abs() || guard >= 60 {
                break;
            }
            lk *= 2.0;
            guard += 1;
        }
        let t_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t));
        if fz <= fx {
            let decrease = fx - fz;
            let x_prev = x;
            x = z;
            let w = (t - 1.0) / t_next;
            y = CovariancePair::new(
                &x.sigma_s + (&x.sigma_s - &x_prev.sigma_s).scale(w),
                &x.sigma_z + (&x.sigma_z - &x_prev.sigma_z).scale(w),
            );
            fx = fz;
            t = t_next;
            if decrease <= cfg.tol * (1.0 + fx.abs()) {
                stalls += 1;
            } else {
                stalls = 0;
            }
        } else {
            // Restart momentum from the best point.
            y = x.clone();
            t = 1.0;
            stalls += 1;
        }
        if stalls >= 3 {
            converged = true;
            break;
        }
        lk = (lk * 0.7).max(l_floor);
    }
    Ok(P42Solution { pair: x, objective: fx, iterations, converged })
}

fn samples_for(cfg: &SaaConfig, ch: &ChannelRealization, seed: u64, rng: &mut (impl Rng + ?Sized)) -> EveSampleSet {
    EveSampleSet::draw_from(ch.dims(), cfg.k_samples, rng, seed, !cfg.objective.known_receiver())
}

/// Surrogate value at `pair` for the majorizer anchored at `anchor`.
pub fn surrogate_objective(
    pair: &CovariancePair,
    anchor: &CovariancePair,
    samples: &EveSampleSet,
    v: &PhaseVector,
    ch: &ChannelRealization,
    l_t: f64,
) -> Result<f64> {
    let model = SampleModel::new(ch, v, samples)?;
    Ok(Surrogate::new(&model, anchor, l_t, false).value(&model, pair))
}

/// Minimizes the artificial-noise majorizer anchored at `anchor`.
pub fn solve_p42(
    anchor: &CovariancePair,
    samples: &EveSampleSet,
    v: &PhaseVector,
    ch: &ChannelRealization,
    l_t: f64,
    inner_cfg: &InnerSolverConfig,
) -> Result<P42Solution> {
    if !(l_t > 0.0) {
        return Err(invalid("l_t must be positive"));
    }
    let model = SampleModel::new(ch, v, samples)?;
    let sur = Surrogate::new(&model, anchor, l_t, false);
    solve_surrogate(&model, &sur, anchor, inner_cfg)
}

/// Runs the solver from `(pair0, v0)`, drawing the sample set from `rng`.
pub fn saa_optimize<R: Rng + ?Sized>(
    config: &SaaConfig,
    ch: &ChannelRealization,
    v0: &PhaseVector,
    pair0: &CovariancePair,
    rng: &mut R,
) -> Result<SaaState> {
    let samples = samples_for(config, ch, 0, rng);
    saa_optimize_with(config, ch, v0, pair0, &samples, &NoClock)
}

/// Runs the solver on a given sample set.
pub fn saa_optimize_with(
    config: &SaaConfig,
    ch: &ChannelRealization,
    v0: &PhaseVector,
    pair0: &CovariancePair,
    samples: &EveSampleSet,
    clock: &dyn Clock,
) -> Result<SaaState> {
    config.validate()?;
    pair0.validate()?;
    let pinned = !config.objective.uses_an();
    if pinned && !pair0.sigma_z_is_zero() {
        return Err(invalid("objectives without artificial noise need Σ_z = 0"));
    }
    let mut model = SampleModel::new(ch, v0, samples)?;
    let mut pair = pair0.clone();
    let mut v = v0.clone();
    let mut obj = model.value(&pair);
    let mut l_t = config.l0.unwrap_or_else(|| default_l0(ch, samples));
    let mut trace = SolverTrace::default();
    let mut row = TraceRow::new(0, obj, clock.elapsed_ms());
    row.lipschitz = Some(l_t);
    trace.push(row);
    let mut stalls = 0;
    let mut converged = false;
    let mut rejected = 0;
    for t in 1..=config.max_outer {
        l_t /= 4.0;
        let mut accepted = None;
        let mut inner_total = 0;
        let tries = if pinned { 1 } else { MAX_DOUBLINGS };
        for _ in 0..tries {
            l_t *= 2.0;
            let sur = Surrogate::new(&model, &pair, l_t, pinned);
            let sol = solve_surrogate(&model, &sur, &pair, &config.inner)?;
            inner_total += sol.iterations;
            let cand_obj = model.value(&sol.pair);
            if cand_obj >= obj {
                accepted = Some((sol.pair, cand_obj));
                break;
            }
        }
        match accepted {
            Some((p, o)) => {
                pair = p;
                obj = o;
            }
            None => rejected += 1,
        }
        if config.objective.known_receiver() {
            let rep = optimize_phases(&pair, ch, &v, config.phase_tol)?;
            let mut trial = model.clone();
            trial.set_phases(ch, &rep.v, samples)?;
            let new_obj = trial.value(&pair);
            if new_obj >= obj {
                v = rep.v;
                model = trial;
                obj = new_obj;
            }
        }
        let prev = trace.rows.last().map(|r| r.objective).unwrap_or(obj);
        let mut row = TraceRow::new(t, obj, clock.elapsed_ms());
        row.lipschitz = Some(l_t);
        row.inner_iterations = Some(inner_total);
        trace.push(row);
        let rel = (obj - prev) / prev.abs().max(1e-12);
        if rel < config.objective_tol {
            stalls += 1;
        } else {
            stalls = 0;
        }
        if stalls >= 3 {
            converged = true;
            break;
        }
    }
    Ok(SaaState { pair, v, l_t, objective: obj, trace, converged, rejected_steps: rejected })
}

/// Norm of the projected-gradient gap of `-C̄` at `pair` with step `r`.
pub fn stationarity_gap(model: &SampleModel, pair: &CovariancePair, r: f64, pinned: bool) -> Result<f64> {
    let g = model.grad(pair, !pinned).neg();
    Ok(prox(pair, &g, r, pinned)?.gap.norm())
}
