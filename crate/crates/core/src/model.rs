//! Problem dimensions, geometry, path loss and seeded channel sampling.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cis, powf, sqrt, CMat, CVec, C64};
use crate::rng::rng_from_seed;

/// Antenna and element counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Access-point antennas.
    pub n_t: usize,
    /// Surface elements.
    pub n_i: usize,
    /// Eavesdropper antennas.
    pub n_e: usize,
}

impl Dims {
    pub fn new(n_t: usize, n_i: usize, n_e: usize) -> Result<Self> {
        let d = Self { n_t, n_i, n_e };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_i == 0 || self.n_e == 0 {
            return Err(invalid(format!("dimensions must be positive, got {:?}", self)));
        }
        Ok(())
    }
}

impl Default for Dims {
    fn default() -> Self {
        Self { n_t: 16, n_i: 32, n_e: 10 }
    }
}

pub type Point3 = [f64; 3];

/// Node positions (meters) and large-scale path-loss parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub ap_pos: Point3,
    pub lis_pos: Point3,
    pub rx_pos: Point3,
    pub eve_pos: Point3,
    /// Linear power gain at the reference distance.
    pub c0: f64,
    /// Reference distance in meters.
    pub d0: f64,
    pub zeta_ai: f64,
    pub zeta_ir: f64,
    pub zeta_ie: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            ap_pos: [0.0, 0.0, 15.0],
            lis_pos: [0.0, 50.0, 15.0],
            rx_pos: [0.0, 45.0, 2.0],
            eve_pos: [3.0, 44.0, 2.0],
            c0: 1e-3,
            d0: 1.0,
            zeta_ai: 2.0,
            zeta_ir: 2.8,
            zeta_ie: 3.0,
        }
    }
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    sqrt((0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum())
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) || !(self.d0 > 0.0) {
            return Err(invalid("c0 and d0 must be positive"));
        }
        for (name, z) in [("zeta_ai", self.zeta_ai), ("zeta_ir", self.zeta_ir), ("zeta_ie", self.zeta_ie)] {
            if !(z >= 0.0) {
                return Err(invalid(format!("{name} must be nonnegative")));
            }
        }
        for (name, a, b) in [
            ("AP-LIS", &self.ap_pos, &self.lis_pos),
            ("LIS-receiver", &self.lis_pos, &self.rx_pos),
            ("LIS-eavesdropper", &self.lis_pos, &self.eve_pos),
        ] {
            if !(distance(a, b) > 0.0) {
                return Err(invalid(format!("{name} distance must be positive")));
            }
        }
        Ok(())
    }
}

/// Everything needed to draw channel realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub dims: Dims,
    pub geometry: Geometry,
    /// Rician factor (LoS to scattered power ratio).
    pub rician_k: f64,
    pub noise_power_dbm: f64,
    pub tx_power_dbm: f64,
    /// Departure and arrival angles (radians) of the LoS steering vectors.
    pub los_angles: (f64, f64),
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let angle = core::f64::consts::PI / 6.0;
        Self {
            dims: Dims::default(),
            geometry: Geometry::default(),
            rician_k: 10.0,
            noise_power_dbm: -80.0,
            tx_power_dbm: 20.0,
            los_angles: (angle, angle),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.geometry.validate()?;
        if !(self.rician_k >= 0.0) {
            return Err(invalid("Rician factor must be nonnegative"));
        }
        if self.noise_power_dbm.is_nan() || self.tx_power_dbm.is_nan() {
            return Err(invalid("power levels must not be NaN"));
        }
        Ok(())
    }
}

/// The four secrecy objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectiveId {
    /// Known receiver channel, no artificial noise.
    C1,
    /// Statistical receiver channel, no artificial noise.
    C2,
    /// Known receiver channel with artificial noise.
    C3,
    /// Statistical receiver channel with artificial noise.
    C4,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 4] = [Self::C1, Self::C2, Self::C3, Self::C4];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "C1" | "c1" => Ok(Self::C1),
            "C2" | "c2" => Ok(Self::C2),
            "C3" | "c3" => Ok(Self::C3),
            "C4" | "c4" => Ok(Self::C4),
            other => Err(Error::UnknownObjective(other.into())),
        }
    }

    pub fn known_receiver(self) -> bool {
        matches!(self, Self::C1 | Self::C3)
    }

    pub fn uses_an(self) -> bool {
        matches!(self, Self::C3 | Self::C4)
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::C3 => "C3",
            Self::C4 => "C4",
        };
        f.write_str(s)
    }
}

/// One draw of every channel plus the effective SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// AP to surface, `N_t x N_I`.
    pub g: CMat,
    /// Surface to receiver, length `N_I`.
    pub h_r: CVec,
    /// Surface to eavesdropper, `N_I x N_e`.
    pub h_e: CMat,
    pub rho_r: f64,
    pub rho_e: f64,
    /// When set, `h_r` is only a representative draw and rate evaluation
    /// averages over fresh i.i.d. receiver channels.
    pub receiver_iid: bool,
}

impl ChannelRealization {
    pub fn dims(&self) -> Dims {
        Dims { n_t: self.g.nrows(), n_i: self.g.ncols(), n_e: self.h_e.ncols() }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        d.validate()?;
        if self.h_r.len() != d.n_i || self.h_e.nrows() != d.n_i {
            return Err(crate::error::mismatch("channel blocks disagree on N_I"));
        }
        let finite = |m: &CMat| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&self.g) || !self.h_r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !finite(&self.h_e) {
            return Err(invalid("channel entries must be finite"));
        }
        if !(self.rho_r >= 0.0 && self.rho_e >= 0.0) {
            return Err(invalid("effective SNRs must be nonnegative"));
        }
        Ok(())
    }
}

/// Fixed list of eavesdropper draws, optionally paired with receiver draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EveSampleSet {
    /// `N_I x N_e` draws of the surface-to-eavesdropper channel.
    pub samples: Vec<CMat>,
    /// Matching receiver draws for statistical-CSI objectives, else empty.
    pub receivers: Vec<CVec>,
    pub seed: u64,
}

impl EveSampleSet {
    /// Draws `k` samples from a generator seeded with `seed`.
    pub fn draw(dims: Dims, k: usize, seed: u64, with_receivers: bool) -> Self {
        let mut rng = rng_from_seed(seed);
        Self::draw_from(dims, k, &mut rng, seed, with_receivers)
    }

    /// Draws `k` samples from an existing generator; `seed` is recorded only.
    pub fn draw_from<R: Rng + ?Sized>(dims: Dims, k: usize, rng: &mut R, seed: u64, with_receivers: bool) -> Self {
        let mut samples = Vec::with_capacity(k);
        let mut receivers = Vec::new();
        for _ in 0..k {
            samples.push(sample_iid_cn(dims.n_i, dims.n_e, rng));
            if with_receivers {
                receivers.push(sample_iid_cn(dims.n_i, 1, rng).column(0).into_owned());
            }
        }
        Self { samples, receivers, seed }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `c0 (d/d0)^(-zeta)`.
pub fn path_loss(d: f64, zeta: f64, c0: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) || !(d0 > 0.0) {
        return Err(invalid(format!("distances must be positive (d={d}, d0={d0})")));
    }
    Ok(c0 * powf(d / d0, -zeta))
}

/// `x` dBm in watts.
pub fn dbm_to_watts(x: f64) -> f64 {
    powf(10.0, (x - 30.0) / 10.0)
}

/// Effective SNRs `(rho_r, rho_e)` combining power, path loss and noise.
pub fn effective_snrs(config: &ChannelConfig) -> Result<(f64, f64)> {
    let g = &config.geometry;
    let d_ai = distance(&g.ap_pos, &g.lis_pos);
    let d_ir = distance(&g.lis_pos, &g.rx_pos);
    let d_ie = distance(&g.lis_pos, &g.eve_pos);
    let l_ai = path_loss(d_ai, g.zeta_ai, g.c0, g.d0)?;
    let l_ir = path_loss(d_ir, g.zeta_ir, g.c0, g.d0)?;
    let l_ie = path_loss(d_ie, g.zeta_ie, g.c0, g.d0)?;
    let p = dbm_to_watts(config.tx_power_dbm);
    let noise = dbm_to_watts(config.noise_power_dbm);
    Ok((p * l_ai * l_ir / noise, p * l_ai * l_ie / noise))
}

/// Entries i.i.d. circularly-symmetric CN(0, 1).
pub fn sample_iid_cn<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// Random PSD matrix `A A^H / Tr(A A^H) * trace` with a uniformly drawn rank.
pub fn sample_psd_with_trace<R: Rng + ?Sized>(n: usize, trace: f64, rng: &mut R) -> CMat {
    let rank = rng.gen_range(1..=n.max(1));
    let a = sample_iid_cn(n, rank, rng);
    let m = &a * a.adjoint();
    let tr: f64 = (0..n).map(|k| m[(k, k)].re).sum();
    if tr > 0.0 {
        m.scale(trace / tr)
    } else {
        m
    }
}

/// Half-wavelength uniform linear array response, unit-modulus entries.
pub fn steering(n: usize, angle: f64) -> CVec {
    let phase = core::f64::consts::PI * libm::sin(angle);
    CVec::from_fn(n, |k, _| cis(phase * k as f64))
}

fn rician_weights(k: f64) -> Result<(f64, f64)> {
    if !(k >= 0.0) {
        return Err(invalid("Rician factor must be nonnegative"));
    }
    Ok((sqrt(k / (1.0 + k)), sqrt(1.0 / (1.0 + k))))
}

/// Rician AP-to-surface channel.
pub fn sample_g_rician<R: Rng + ?Sized>(config: &ChannelConfig, rng: &mut R) -> Result<CMat> {
    let (w_los, w_nlos) = rician_weights(config.rician_k)?;
    let d = config.dims;
    let a_t = steering(d.n_t, config.los_angles.0);
    let a_i = steering(d.n_i, config.los_angles.1);
    let los = &a_t * a_i.adjoint();
    let nlos = sample_iid_cn(d.n_t, d.n_i, rng);
    Ok(los * C64::new(w_los, 0.0) + nlos * C64::new(w_nlos, 0.0))
}

/// Draws `G`, `h_r` and one `H_e` for the given objective.
pub fn sample_channels<R: Rng + ?Sized>(config: &ChannelConfig, objective: ObjectiveId, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    let d = config.dims;
    let (rho_r, rho_e) = effective_snrs(config)?;
    let g = sample_g_rician(config, rng)?;
    let h_r = if objective.known_receiver() {
        let (w_los, w_nlos) = rician_weights(config.rician_k)?;
        let los = steering(d.n_i, config.los_angles.0);
        let nlos = sample_iid_cn(d.n_i, 1, rng).column(0).into_owned();
        los * C64::new(w_los, 0.0) + nlos * C64::new(w_nlos, 0.0)
    } else {
        sample_iid_cn(d.n_i, 1, rng).column(0).into_owned()
    };
    let h_e = sample_iid_cn(d.n_i, d.n_e, rng);
    Ok(ChannelRealization { g, h_r, h_e, rho_r, rho_e, receiver_iid: !objective.known_receiver() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_norm;
    use crate::rng::rng_from_seed;

    #[test]
    fn path_loss_reference_values() {
        assert!((path_loss(1.0, 2.0, 1e-3, 1.0).unwrap() - 1e-3).abs() < 1e-18);
        assert!((path_loss(50.0, 2.0, 1e-3, 1.0).unwrap() - 4e-7).abs() < 1e-20);
        assert_eq!(path_loss(3.0, 2.5, 0.2, 3.0).unwrap(), 0.2);
        assert!(path_loss(0.0, 2.0, 1e-3, 1.0).is_err());
        assert!(path_loss(1.0, 2.0, 1e-3, -1.0).is_err());
    }

    #[test]
    fn zero_power_gives_zero_snr() {
        let mut cfg = ChannelConfig::default();
        cfg.tx_power_dbm = f64::NEG_INFINITY;
        assert_eq!(effective_snrs(&cfg).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn snr_linear_in_power() {
        let mut cfg = ChannelConfig::default();
        let (r1, e1) = effective_snrs(&cfg).unwrap();
        cfg.tx_power_dbm += 10.0 * libm::log10(2.0);
        let (r2, e2) = effective_snrs(&cfg).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-12 && (e2 / e1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_nodes_rejected() {
        let mut cfg = ChannelConfig::default();
        cfg.geometry.rx_pos = cfg.geometry.lis_pos;
        assert!(effective_snrs(&cfg).is_err());
    }

    #[test]
    fn huge_k_returns_los() {
        let mut cfg = ChannelConfig::default();
        cfg.rician_k = 1e12;
        let g = sample_g_rician(&cfg, &mut rng_from_seed(3)).unwrap();
        let los = steering(16, cfg.los_angles.0) * steering(32, cfg.los_angles.1).adjoint();
        assert!((g - los).iter().all(|z| z.norm() < 1e-5));
    }

    #[test]
    fn default_dims_shapes_and_flags() {
        let cfg = ChannelConfig::default();
        let ch = sample_channels(&cfg, ObjectiveId::C1, &mut rng_from_seed(1)).unwrap();
        assert_eq!((ch.g.nrows(), ch.g.ncols()), (16, 32));
        assert_eq!((ch.h_e.nrows(), ch.h_e.ncols()), (32, 10));
        assert!(!ch.receiver_iid);
        let again = sample_channels(&cfg, ObjectiveId::C1, &mut rng_from_seed(1)).unwrap();
        assert_eq!(ch, again);
        let c2 = sample_channels(&cfg, ObjectiveId::C2, &mut rng_from_seed(1)).unwrap();
        assert!(c2.receiver_iid);
    }

    #[test]
    fn negative_k_rejected() {
        let mut cfg = ChannelConfig::default();
        cfg.rician_k = -1.0;
        assert!(sample_g_rician(&cfg, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn sample_sets_reproducible() {
        let d = Dims::default();
        let a = EveSampleSet::draw(d, 5, 42, true);
        let b = EveSampleSet::draw(d, 5, 42, true);
        assert_eq!(a, b);
        assert!(fro_norm(&(&a.samples[0] - &b.samples[1])) > 0.0);
    }
}
