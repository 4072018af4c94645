//! Experiment runner: grid points × trials × objectives × solvers.
//!
//! Each (grid point, trial) task owns the seed
//! `derive_seed(master_seed, [grid_index, trial])`. The channel, the
//! optimization samples, the starting phases and the validation set are
//! all drawn from sub-streams of that seed, so every solver and objective
//! in a task sees the same channel and is scored on the same validation
//! draws. Tasks run in (grid, trial) order and rows come out in that order.

use std::time::Instant;

use lis_secrecy::model::{sample_channels, sample_psd_with_trace};
use lis_secrecy::rng::{child_rng, derive_seed};
use lis_secrecy::saa::{saa_optimize_with, SaaConfig};
use lis_secrecy::special_cases::alt_opt_c1;
use lis_secrecy::spg_cp::{spg_optimize_with, SpgConfig};
use lis_secrecy::trace::{Clock, NoClock};
use lis_secrecy::rates::SampleModel;
use lis_secrecy::{ChannelConfig, ChannelRealization, CovariancePair, EveSampleSet, ObjectiveId, PhaseVector, RateEstimate, CMat};
use rand::Rng;

use crate::config::{ExperimentConfig, ExperimentId, SolverKind};
use crate::error::{SimError, SimResult};
use crate::output::write_csv;

/// Sub-stream keys under a task seed.
const KEY_CHANNEL: u64 = 0;
const KEY_SAA: u64 = 1;
const KEY_SPG: u64 = 2;
const KEY_VALIDATION: u64 = 3;
const KEY_PHASES: u64 = 4;
const KEY_START: u64 = 5;
/// Key of the baseline phase stream under the master seed.
const KEY_BASELINE: u64 = u64::MAX;

/// Iteration value marking a final (validated) row.
pub const FINAL_ITERATION: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_id: ExperimentId,
    pub trial: usize,
    pub seed: u64,
    pub solver: String,
    pub objective_id: ObjectiveId,
    pub p_dbm: f64,
    pub n_i: usize,
    pub iteration: i64,
    pub rate_bits: f64,
    pub std_error: f64,
    pub wall_ms: f64,
}

impl ResultRow {
    pub fn is_final(&self) -> bool {
        self.iteration == FINAL_ITERATION
    }
}

/// Wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// One (grid point, trial) unit of work.
#[derive(Debug, Clone)]
pub struct Task {
    pub grid_index: usize,
    pub trial: usize,
    pub seed: u64,
    pub channel: ChannelConfig,
    /// Solvers to run; `None` means all configured solvers.
    pub only: Option<SolverKind>,
    /// Starting-point case for the convergence experiment.
    pub start_case: Option<usize>,
}

impl Task {
    pub fn p_dbm(&self) -> f64 {
        self.channel.tx_power_dbm
    }

    pub fn n_i(&self) -> usize {
        self.channel.dims.n_i
    }

    /// Channel draw for an objective; objectives sharing receiver knowledge share the draw.
    pub fn realization(&self, objective: ObjectiveId) -> SimResult<ChannelRealization> {
        let mut rng = child_rng(self.seed, &[KEY_CHANNEL]);
        Ok(sample_channels(&self.channel, objective, &mut rng)?)
    }

    /// Independent set used to score final points.
    pub fn validation_set(&self, ch: &ChannelRealization, k: usize) -> EveSampleSet {
        EveSampleSet::draw(ch.dims(), k, derive_seed(self.seed, &[KEY_VALIDATION]), ch.receiver_iid)
    }

    pub fn start_phases(&self) -> PhaseVector {
        let mut rng = child_rng(self.seed, &[KEY_PHASES]);
        PhaseVector::random(self.n_i(), &mut rng)
    }
}

/// Number of starting-point cases in the convergence experiment.
pub const CONVERGENCE_CASES: usize = 2;

/// Starting covariance for `objective`.
///
/// Case 0 is isotropic, `I/N_t`, split evenly between message and noise when
/// the objective uses artificial noise. Case 1 draws random semidefinite
/// blocks with the same traces.
pub fn initial_pair(objective: ObjectiveId, n_t: usize, case: usize, seed: u64) -> CovariancePair {
    let an = objective.uses_an();
    let ts = if an { 0.5 } else { 1.0 };
    if case == 0 {
        let eye = CMat::identity(n_t, n_t);
        let s = eye.scale(ts / n_t as f64);
        let z = if an { eye.scale(0.5 / n_t as f64) } else { CMat::zeros(n_t, n_t) };
        return CovariancePair::new(s, z);
    }
    let mut rng = child_rng(seed, &[KEY_START, case as u64]);
    let s = sample_psd_with_trace(n_t, ts, &mut rng);
    let z = if an { sample_psd_with_trace(n_t, 0.5, &mut rng) } else { CMat::zeros(n_t, n_t) };
    CovariancePair::new(s, z)
}

/// Expands the configured grid into tasks in output order.
pub fn tasks(config: &ExperimentConfig) -> Vec<Task> {
    let mut out = Vec::new();
    let mut push = |grid_index: usize, channel: ChannelConfig, only: Option<SolverKind>, start_case: Option<usize>| {
        for trial in 0..config.trials {
            let seed = derive_seed(config.master_seed, &[grid_index as u64, trial as u64]);
            out.push(Task { grid_index, trial, seed, channel, only, start_case });
        }
    };
    match config.experiment {
        ExperimentId::PowerSweep | ExperimentId::AnComparison | ExperimentId::C2C4Ne1 => {
            for (i, &p) in config.power_grid_dbm.iter().enumerate() {
                let mut ch = config.channel;
                ch.tx_power_dbm = p;
                if config.experiment == ExperimentId::C2C4Ne1 {
                    ch.dims.n_e = 1;
                }
                push(i, ch, None, None);
            }
        }
        ExperimentId::NisSweep => {
            for (i, &n) in config.nis_grid.iter().enumerate() {
                let mut ch = config.channel;
                ch.dims.n_i = n;
                push(i, ch, None, None);
            }
        }
        ExperimentId::Convergence => {
            let (p_saa, p_spg) = config.convergence_power_dbm;
            let mut grid = 0;
            for (kind, p) in [(SolverKind::Saa, p_saa), (SolverKind::Spg, p_spg)] {
                if !config.solvers.contains(&kind) {
                    continue;
                }
                for case in 0..CONVERGENCE_CASES {
                    let mut ch = config.channel;
                    ch.tx_power_dbm = p;
                    push(grid, ch, Some(kind), Some(case));
                    grid += 1;
                }
            }
        }
    }
    out
}

/// Final point of one solver run plus its trace as (iteration, value, std error, ms).
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub pair: CovariancePair,
    pub v: PhaseVector,
    pub trace: Vec<(i64, f64, f64, f64)>,
    pub wall_ms: f64,
}

/// Runs one solver on a task's channel from `(pair0, v0)`.
pub fn run_solver(
    kind: SolverKind,
    config: &ExperimentConfig,
    task: &Task,
    objective: ObjectiveId,
    ch: &ChannelRealization,
    pair0: &CovariancePair,
    v0: &PhaseVector,
) -> SimResult<SolverOutcome> {
    let wall = WallClock::start();
    let clock: &dyn Clock = if config.record_timing { &wall } else { &NoClock };
    let timed = |t: f64| if config.record_timing { t } else { 0.0 };
    match kind {
        SolverKind::Saa => {
            let saa = SaaConfig { objective, ..config.saa };
            let samples = EveSampleSet::draw(ch.dims(), saa.k_samples, derive_seed(task.seed, &[KEY_SAA]), ch.receiver_iid);
            let state = saa_optimize_with(&saa, ch, v0, pair0, &samples, clock)?;
            let trace = state.trace.rows.iter().map(|r| (r.iteration as i64, r.objective, 0.0, r.wall_ms)).collect();
            Ok(SolverOutcome { pair: state.pair, v: state.v, trace, wall_ms: timed(clock.elapsed_ms()) })
        }
        SolverKind::Spg => {
            let spg = SpgConfig { objective, seed: derive_seed(task.seed, &[KEY_SPG]), ..config.spg };
            let run = spg_optimize_with(&spg, ch, (pair0, v0), clock)?;
            let st = &run.state;
            let trace = st
                .trace
                .rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.objective.is_finite())
                .map(|(i, r)| {
                    let se = st.objective_estimates.get(i).map_or(0.0, |e| e.std_error);
                    (r.iteration as i64, r.objective, se, r.wall_ms)
                })
                .collect();
            Ok(SolverOutcome { pair: st.pair.clone(), v: st.v.clone(), trace, wall_ms: timed(clock.elapsed_ms()) })
        }
        SolverKind::AltOpt => {
            if objective != ObjectiveId::C1 {
                return Err(SimError::Config(format!("solver altopt only handles c1, not {objective}")));
            }
            let rep = alt_opt_c1(ch, v0, config.alt.max_iters, config.alt.tol)?;
            let trace = rep.objective_trace.iter().enumerate().map(|(i, &x)| (i as i64, x, 0.0, 0.0)).collect();
            let n_t = ch.dims().n_t;
            let pair = CovariancePair::new(rep.sigma_s(), CMat::zeros(n_t, n_t));
            Ok(SolverOutcome { pair, v: rep.v, trace, wall_ms: timed(clock.elapsed_ms()) })
        }
    }
}

/// Rate of `(pair, v)` on the task's validation set.
pub fn validated_rate(ch: &ChannelRealization, pair: &CovariancePair, v: &PhaseVector, set: &EveSampleSet) -> SimResult<RateEstimate> {
    Ok(SampleModel::new(ch, v, set)?.estimate(pair))
}

fn solver_label(kind: SolverKind, case: Option<usize>) -> String {
    match case {
        Some(c) => format!("{}-case{}", kind.as_str(), c + 1),
        None => kind.as_str().to_string(),
    }
}

/// Runs one task, returning its rows.
pub fn run_task(config: &ExperimentConfig, task: &Task) -> SimResult<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let v0 = task.start_phases();
    for objective in config.objectives() {
        let ch = task.realization(objective)?;
        let set = task.validation_set(&ch, config.validation_samples);
        let pair0 = initial_pair(objective, task.channel.dims.n_t, task.start_case.unwrap_or(0), task.seed);
        for &kind in &config.solvers {
            if task.only.is_some_and(|k| k != kind) {
                continue;
            }
            let out = run_solver(kind, config, task, objective, &ch, &pair0, &v0)?;
            let row = |iteration: i64, rate_bits: f64, std_error: f64, wall_ms: f64| ResultRow {
                experiment_id: config.experiment,
                trial: task.trial,
                seed: task.seed,
                solver: solver_label(kind, task.start_case),
                objective_id: objective,
                p_dbm: task.p_dbm(),
                n_i: task.n_i(),
                iteration,
                rate_bits,
                std_error,
                wall_ms,
            };
            for &(it, value, se, ms) in &out.trace {
                rows.push(row(it, value, se, ms));
            }
            let est = validated_rate(&ch, &out.pair, &out.v, &set)?;
            rows.push(row(FINAL_ITERATION, est.value, est.std_error, out.wall_ms));
        }
    }
    Ok(rows)
}

/// Rates at uniformly random phases with `Σ_s = I/N_t` and `Σ_z = 0`.
///
/// Channels and validation sets match the optimized runs of the same
/// task; only the phases come from `rng`.
pub fn baseline_random_phase<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> SimResult<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for task in tasks(config) {
        if task.start_case.is_some_and(|c| c != 0) {
            continue;
        }
        let v = PhaseVector::random(task.n_i(), rng);
        for objective in config.objectives() {
            let ch = task.realization(objective)?;
            let set = task.validation_set(&ch, config.validation_samples);
            let pair = initial_pair(ObjectiveId::C1, task.channel.dims.n_t, 0, task.seed);
            let est = validated_rate(&ch, &pair, &v, &set)?;
            rows.push(ResultRow {
                experiment_id: config.experiment,
                trial: task.trial,
                seed: task.seed,
                solver: "baseline".to_string(),
                objective_id: objective,
                p_dbm: task.p_dbm(),
                n_i: task.n_i(),
                iteration: FINAL_ITERATION,
                rate_bits: est.value,
                std_error: est.std_error,
                wall_ms: 0.0,
            });
        }
    }
    Ok(rows)
}

/// Computes all rows of an experiment without writing them.
pub fn collect_rows(config: &ExperimentConfig) -> SimResult<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for task in tasks(config) {
        rows.extend(run_task(config, &task)?);
    }
    if config.baseline {
        let mut rng = child_rng(config.master_seed, &[KEY_BASELINE]);
        rows.extend(baseline_random_phase(config, &mut rng)?);
    }
    Ok(rows)
}

/// Runs the experiment and writes the rows to `config.output_path`.
pub fn run_experiment(config: &ExperimentConfig) -> SimResult<Vec<ResultRow>> {
    let rows = collect_rows(config)?;
    write_csv(&config.output_path, &rows)?;
    Ok(rows)
}

/// Mean and pooled standard error (`sqrt(sum se^2) / n`) of final rows.
pub fn pooled_mean(rows: &[&ResultRow]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.rate_bits).sum::<f64>() / n;
    let se = rows.iter().map(|r| r.std_error * r.std_error).sum::<f64>().sqrt() / n;
    (mean, se)
}
