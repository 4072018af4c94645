//! Experiment harness for `lis-secrecy`: configuration files, seeded
//! sweeps, CSV output and a quick self-test.

pub mod config;
mod error;
pub mod harness;
pub mod output;
pub mod selftest;

pub use error::{SimError, SimResult};
