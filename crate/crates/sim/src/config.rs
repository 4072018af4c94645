//! Experiment configuration in a flat `section.key = value` format.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated, points are `x,y,z`. Every key is optional; an empty file
//! yields [`ExperimentConfig::default`]. Unknown keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lis_secrecy::saa::{InnerSolverConfig, SaaConfig};
use lis_secrecy::spg_cp::SpgConfig;
use lis_secrecy::{ChannelConfig, ObjectiveId};

use crate::error::{SimError, SimResult};

/// Environment variable that replaces `experiment.master_seed`.
pub const SEED_ENV: &str = "LIS_SECRECY_MASTER_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    PowerSweep,
    NisSweep,
    Convergence,
    AnComparison,
    C2C4Ne1,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::PowerSweep => "power_sweep",
            ExperimentId::NisSweep => "nis_sweep",
            ExperimentId::Convergence => "convergence",
            ExperimentId::AnComparison => "an_comparison",
            ExperimentId::C2C4Ne1 => "c2_c4_ne1",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "power_sweep" => ExperimentId::PowerSweep,
            "nis_sweep" => ExperimentId::NisSweep,
            "convergence" => ExperimentId::Convergence,
            "an_comparison" => ExperimentId::AnComparison,
            "c2_c4_ne1" => ExperimentId::C2C4Ne1,
            other => return Err(format!("unknown experiment `{other}`")),
        })
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Saa,
    Spg,
    /// Rank-one alternating optimization (known receiver, no artificial noise).
    AltOpt,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Saa => "saa",
            SolverKind::Spg => "spg",
            SolverKind::AltOpt => "altopt",
        }
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "saa" => SolverKind::Saa,
            "spg" => SolverKind::Spg,
            "altopt" => SolverKind::AltOpt,
            other => return Err(format!("unknown solver `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltOptConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for AltOptConfig {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub channel: ChannelConfig,
    pub objective: ObjectiveId,
    pub solvers: Vec<SolverKind>,
    pub saa: SaaConfig,
    pub spg: SpgConfig,
    pub alt: AltOptConfig,
    pub power_grid_dbm: Vec<f64>,
    pub nis_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub output_path: PathBuf,
    /// Samples in the independent set used for reported rates.
    pub validation_samples: usize,
    /// Also emit the random-phase baseline rows.
    pub baseline: bool,
    /// Record wall-clock times; off keeps the CSV byte-reproducible.
    pub record_timing: bool,
    /// Transmit powers of the SAA and SPG runs in the convergence experiment.
    pub convergence_power_dbm: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentId::PowerSweep,
            channel: ChannelConfig::default(),
            objective: ObjectiveId::C1,
            solvers: vec![SolverKind::Saa],
            saa: SaaConfig { k_samples: 500, objective: ObjectiveId::C1, ..SaaConfig::default() },
            spg: SpgConfig { n_iters: 60, validation_samples: 1000, objective: ObjectiveId::C1, ..SpgConfig::default() },
            alt: AltOptConfig::default(),
            power_grid_dbm: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            nis_grid: vec![8, 16, 24, 32, 40],
            trials: 10,
            master_seed: 20_200_101,
            output_path: PathBuf::from("results.csv"),
            validation_samples: 10_000,
            baseline: false,
            record_timing: false,
            convergence_power_dbm: (15.0, 25.0),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> SimResult<()> {
        let bad = |m: String| Err(SimError::Config(m));
        self.channel.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.saa.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.spg.validate().map_err(|e| SimError::Config(e.to_string()))?;
        if self.trials == 0 {
            return bad("experiment.trials must be positive".into());
        }
        if self.solvers.is_empty() {
            return bad("experiment.solvers must name at least one solver".into());
        }
        if self.validation_samples == 0 {
            return bad("experiment.validation_samples must be positive".into());
        }
        match self.experiment {
            ExperimentId::PowerSweep | ExperimentId::AnComparison | ExperimentId::C2C4Ne1 if self.power_grid_dbm.is_empty() => {
                return bad("experiment.power_grid_dbm must not be empty".into());
            }
            ExperimentId::NisSweep if self.nis_grid.is_empty() || self.nis_grid.contains(&0) => {
                return bad("experiment.nis_grid must hold positive sizes".into());
            }
            _ => {}
        }
        for obj in self.objectives() {
            if self.solvers.contains(&SolverKind::AltOpt) && obj != ObjectiveId::C1 {
                return bad(format!("solver altopt only handles c1, not {obj}"));
            }
        }
        Ok(())
    }

    /// Objectives optimized by this experiment.
    pub fn objectives(&self) -> Vec<ObjectiveId> {
        match self.experiment {
            ExperimentId::AnComparison => vec![ObjectiveId::C1, ObjectiveId::C3],
            ExperimentId::C2C4Ne1 => vec![ObjectiveId::C2, ObjectiveId::C4],
            _ => vec![self.objective],
        }
    }
}

fn parse_value<T: FromStr>(raw: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| format!("cannot parse `{raw}`: {e}"))
}

fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    raw.split(',').map(|s| parse_value(s.trim())).collect()
}

fn parse_point(raw: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = parse_list(raw)?;
    v.try_into().map_err(|_| format!("expected three coordinates, got `{raw}`"))
}

fn parse_bool(raw: &str) -> Result<bool, String> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{raw}`")),
    }
}

fn parse_objective(raw: &str) -> Result<ObjectiveId, String> {
    ObjectiveId::parse(raw).map_err(|e| e.to_string())
}

fn apply(cfg: &mut ExperimentConfig, key: &str, raw: &str) -> Result<(), String> {
    let ch = &mut cfg.channel;
    let g = &mut ch.geometry;
    match key {
        "experiment.id" => cfg.experiment = parse_value(raw)?,
        "experiment.objective" => cfg.objective = parse_objective(raw)?,
        "experiment.solvers" => cfg.solvers = parse_list(raw)?,
        "experiment.trials" => cfg.trials = parse_value(raw)?,
        "experiment.master_seed" => cfg.master_seed = parse_value(raw)?,
        "experiment.output" => cfg.output_path = PathBuf::from(raw),
        "experiment.power_grid_dbm" => cfg.power_grid_dbm = parse_list(raw)?,
        "experiment.nis_grid" => cfg.nis_grid = parse_list(raw)?,
        "experiment.validation_samples" => cfg.validation_samples = parse_value(raw)?,
        "experiment.baseline" => cfg.baseline = parse_bool(raw)?,
        "experiment.record_timing" => cfg.record_timing = parse_bool(raw)?,
        "experiment.convergence_power_dbm" => {
            let v: Vec<f64> = parse_list(raw)?;
            let [a, b]: [f64; 2] = v.try_into().map_err(|_| "expected two powers".to_string())?;
            cfg.convergence_power_dbm = (a, b);
        }
        "dims.n_t" => ch.dims.n_t = parse_value(raw)?,
        "dims.n_i" => ch.dims.n_i = parse_value(raw)?,
        "dims.n_e" => ch.dims.n_e = parse_value(raw)?,
        "channel.rician_k" => ch.rician_k = parse_value(raw)?,
        "channel.noise_dbm" => ch.noise_power_dbm = parse_value(raw)?,
        "channel.tx_power_dbm" => ch.tx_power_dbm = parse_value(raw)?,
        "channel.aod" => ch.los_angles.0 = parse_value(raw)?,
        "channel.aoa" => ch.los_angles.1 = parse_value(raw)?,
        "geometry.ap" => g.ap_pos = parse_point(raw)?,
        "geometry.lis" => g.lis_pos = parse_point(raw)?,
        "geometry.rx" => g.rx_pos = parse_point(raw)?,
        "geometry.eve" => g.eve_pos = parse_point(raw)?,
        "geometry.c0" => g.c0 = parse_value(raw)?,
        "geometry.d0" => g.d0 = parse_value(raw)?,
        "geometry.zeta_ai" => g.zeta_ai = parse_value(raw)?,
        "geometry.zeta_ir" => g.zeta_ir = parse_value(raw)?,
        "geometry.zeta_ie" => g.zeta_ie = parse_value(raw)?,
        "saa.k_samples" => cfg.saa.k_samples = parse_value(raw)?,
        "saa.l0" => cfg.saa.l0 = Some(parse_value(raw)?),
        "saa.max_outer" => cfg.saa.max_outer = parse_value(raw)?,
        "saa.objective_tol" => cfg.saa.objective_tol = parse_value(raw)?,
        "saa.inner_max_iters" => cfg.saa.inner = InnerSolverConfig { max_iters: parse_value(raw)?, ..cfg.saa.inner },
        "saa.inner_tol" => cfg.saa.inner = InnerSolverConfig { tol: parse_value(raw)?, ..cfg.saa.inner },
        "spg.alpha" => cfg.spg.alpha = parse_value(raw)?,
        "spg.n_iters" => cfg.spg.n_iters = parse_value(raw)?,
        "spg.r" => cfg.spg.r = Some(parse_value(raw)?),
        "spg.l_est_trials" => cfg.spg.l_est_trials = parse_value(raw)?,
        "spg.l_est_samples" => cfg.spg.l_est_samples = parse_value(raw)?,
        "spg.validation_samples" => cfg.spg.validation_samples = parse_value(raw)?,
        "alt.max_iters" => cfg.alt.max_iters = parse_value(raw)?,
        "alt.tol" => cfg.alt.tol = parse_value(raw)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> SimResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| SimError::Parse { path: origin.to_string(), line: idx + 1, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `section.key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        apply(&mut cfg, key, value).map_err(err)?;
    }
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> SimResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::ConfigRead { path: path.to_path_buf(), source })?;
    parse_config(&text, &path.display().to_string())
}

/// Applies the seed override from [`SEED_ENV`] when it is set.
pub fn apply_seed_override(cfg: &mut ExperimentConfig) -> SimResult<()> {
    if let Ok(raw) = std::env::var(SEED_ENV) {
        cfg.master_seed = raw.trim().parse().map_err(|_| SimError::Config(format!("{SEED_ENV} is not an unsigned integer: `{raw}`")))?;
    }
    Ok(())
}
