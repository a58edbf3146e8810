use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Method, SolverState};
use crate::error::Result;

pub const TRACE_CSV_HEADER: &str = "iter,primal_err_sq,dual_err_sq,lyapunov,range_residual,rel_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminationStatus {
    Converged,
    MaxIter,
    Diverged,
}

/// One row of a solver trace. Error fields are only present when a
/// reference saddle point was supplied.
///
/// The dual error uses the incremental-equivalent dual: `λ` itself for the
/// incremental recursion, `λ′ + μ_λ(Bw − b)` for the non-incremental one and
/// `λ′ − μ_λBw` for forward-backward. All three converge to `λ★_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub primal_err_sq: Option<f64>,
    pub dual_err_sq: Option<f64>,
    /// `c_w‖w̃‖² + c_λ‖λ̃‖²`
    pub lyapunov: Option<f64>,
    /// `‖λ − P_B λ‖` of the incremental-equivalent dual.
    pub range_residual: f64,
    /// `‖w − w★‖² / ‖w★‖²`, or the absolute squared error when `w★ = 0`.
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub method: Method,
    /// Record `i` describes the state after `i` steps; record 0 is the
    /// initial state.
    pub records: Vec<TraceRecord>,
    pub status: TerminationStatus,
    /// Final state, or the last finite one when the run diverged.
    pub final_state: SolverState,
    pub c_w: f64,
    pub c_lambda: f64,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.final_state.iteration
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn lyapunov(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.lyapunov).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| format!("{x:e}")).unwrap_or_default()
        }
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{:e},{}",
                r.iteration,
                cell(r.primal_err_sq),
                cell(r.dual_err_sq),
                cell(r.lyapunov),
                r.range_residual,
                cell(r.rel_error)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}
