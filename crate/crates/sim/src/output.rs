//! CSV output.
//!
//! Columns, in order: `experiment_id, trial, seed, solver, objective_id,
//! p_dbm, n_i, iteration, rate_bits, std_error, wall_ms`. Final rows have
//! `iteration = -1`. Reals are written in scientific notation with 12
//! significant digits.

use std::io::Write;
use std::path::Path;

use crate::error::{SimError, SimResult};
use crate::harness::ResultRow;

pub const HEADER: [&str; 11] =
    ["experiment_id", "trial", "seed", "solver", "objective_id", "p_dbm", "n_i", "iteration", "rate_bits", "std_error", "wall_ms"];

pub fn format_real(x: f64) -> String {
    format!("{x:.11e}")
}

fn record(row: &ResultRow) -> [String; 11] {
    [
        row.experiment_id.to_string(),
        row.trial.to_string(),
        row.seed.to_string(),
        row.solver.clone(),
        row.objective_id.to_string(),
        format_real(row.p_dbm),
        row.n_i.to_string(),
        row.iteration.to_string(),
        format_real(row.rate_bits),
        format_real(row.std_error),
        format_real(row.wall_ms),
    ]
}

/// Writes rows to any sink; `path` only labels errors.
pub fn write_rows<W: Write>(sink: W, rows: &[ResultRow], path: &Path) -> SimResult<()> {
    let err = |source| SimError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER).map_err(err)?;
    for row in rows {
        w.write_record(record(row)).map_err(err)?;
    }
    w.flush().map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> SimResult<()> {
    let file = std::fs::File::create(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
    write_rows(std::io::BufWriter::new(file), rows, path)
}
