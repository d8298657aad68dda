//! Per-iteration solver records and their CSV / JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: [&str; 10] = [
    "iter",
    "time_s",
    "phi",
    "f",
    "sqloss",
    "psi",
    "theta",
    "sigma_top",
    "rank",
    "factor_rank",
];

/// One iteration of a solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Seconds since the solve started.
    pub wall_time: f64,
    pub phi: f64,
    pub f_smooth: f64,
    pub square_loss: f64,
    /// Not defined for the dense baseline.
    pub psi: Option<f64>,
    pub theta: Option<f64>,
    pub sigma_top: Option<f64>,
    /// Numerical rank of the recovered structured matrix, when tracked.
    pub rank_estimate: Option<usize>,
    pub factor_rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `‖x_k − x_{k−1}‖_F` fell below the tolerance.
    IterateChange,
    /// Relative change of `φ` fell below the tolerance.
    ObjectiveChange,
    MaxIter,
    /// The gradient vanished, so the current iterate is already optimal.
    Stationary,
    /// Run aborted before finishing (e.g. divergence).
    Aborted,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::IterateChange => "iterate_change",
            StopReason::ObjectiveChange => "objective_change",
            StopReason::MaxIter => "max_iter",
            StopReason::Stationary => "stationary",
            StopReason::Aborted => "aborted",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<IterRecord>,
    pub stop_reason: StopReason,
    pub wall_time: f64,
}

/// Stable run summary written next to the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub solver: String,
    pub iters: usize,
    pub final_phi: f64,
    pub final_sqloss: f64,
    pub final_rank: Option<usize>,
    pub wall_time_s: f64,
    pub converged_reason: StopReason,
    pub seed: u64,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SolveTrace {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
            stop_reason: StopReason::MaxIter,
            wall_time: 0.0,
        }
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format!("{:.6}", r.wall_time),
                r.phi.to_string(),
                r.f_smooth.to_string(),
                r.square_loss.to_string(),
                opt(r.psi),
                opt(r.theta),
                opt(r.sigma_top),
                opt(r.rank_estimate),
                r.factor_rank.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn summary(&self, solver: &str, seed: u64) -> Summary {
        let last = self.records.last();
        Summary {
            solver: solver.to_string(),
            iters: self.records.len(),
            final_phi: last.map_or(f64::NAN, |r| r.phi),
            final_sqloss: last.map_or(f64::NAN, |r| r.square_loss),
            final_rank: last.and_then(|r| r.rank_estimate),
            wall_time_s: self.wall_time,
            converged_reason: self.stop_reason,
            seed,
        }
    }
}

impl Default for SolveTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
