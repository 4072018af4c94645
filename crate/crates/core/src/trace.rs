//! Per-iteration solver records.

use alloc::vec::Vec;

/// One row of an optimizer trace. Fields a solver does not track are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Objective in bits/s/Hz (sample-average or exact, depending on solver).
    pub objective: f64,
    pub lipschitz: Option<f64>,
    pub inner_iterations: Option<usize>,
    pub batch_size: Option<usize>,
    pub gap_norm: Option<f64>,
    /// Milliseconds since the solver started, as reported by its [`Clock`].
    pub wall_ms: f64,
}

impl TraceRow {
    pub fn new(iteration: usize, objective: f64, wall_ms: f64) -> Self {
        Self { iteration, objective, lipschitz: None, inner_iterations: None, batch_size: None, gap_norm: None, wall_ms }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Source of elapsed time. The core crate has no clock of its own; hosts
/// with `std` pass one in.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}
