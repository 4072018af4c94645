//! Secrecy-rate optimization for a multi-antenna access point whose signal
//! reaches a legitimate receiver and an eavesdropper only through a large
//! intelligent surface (LIS).
//!
//! The crate is `no_std` with `alloc`. It covers channel sampling
//! ([`model`]), rate evaluation and gradients ([`rates`]), projections onto
//! the covariance feasible set ([`psd_geometry`]), phase-shift optimization
//! ([`phase_opt`]), the sample-average solver ([`saa`]), the stochastic
//! projected-gradient solver ([`spg_cp`]) and closed-form special cases
//! ([`special_cases`]).
//!
//! Rates are reported in bits/s/Hz. Matrix gradients are Hermitian matrices
//! `g` such that `f(X + D) = f(X) + <g, D> + o(|D|)` with
//! `<A, B> = Re tr(A^H B)`.
#![no_std]

extern crate alloc;

mod error;
pub mod linalg;
pub mod model;
pub mod phase_opt;
pub mod psd_geometry;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod saa;
pub mod spg_cp;
pub mod special_cases;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use rates::{CovariancePair, GradientPair, PhaseVector, RateEstimate};
pub use model::{ChannelConfig, ChannelRealization, Dims, EveSampleSet, Geometry, ObjectiveId};


