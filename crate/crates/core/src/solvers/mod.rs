//! Primal-dual recursions for `min J(w) s.t. Bw = b`, their step-size
//! bounds, contraction certificates and iteration driver.

mod bounds;
mod equivalence;
mod run;
mod steps;
mod trace;

pub use bounds::{
    auto_step_sizes, shifted_constants, step_size_bounds, theoretical_rate, BoundsRegime, RateReport, ShiftedConstants,
    StepSizeBounds,
};
pub use equivalence::{
    forward_backward_equivalent, to_incremental_equivalent, EquivalenceRegime, IncrementalEquivalent,
};
pub use run::{run_solver, RunMetadata};
pub use steps::{forward_backward_step, incremental_step, nonincremental_step, step};
pub use trace::{TerminationStatus, Trace, TraceRecord, TRACE_CSV_HEADER};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which primal-dual recursion to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    /// Dual ascent uses the fresh primal iterate `w_i`.
    Incremental,
    /// Arrow-Hurwicz: dual ascent uses `w_{i-1}`; the penalty is `η`.
    NonIncremental,
    /// Dual ascent on `B(2w_i - w_{i-1})`; requires `b = 0`.
    ForwardBackward,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Incremental => "inc",
            Method::NonIncremental => "noninc",
            Method::ForwardBackward => "fb",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inc" | "incremental" => Ok(Method::Incremental),
            "noninc" | "nonincremental" | "non-incremental" => Ok(Method::NonIncremental),
            "fb" | "forward-backward" => Ok(Method::ForwardBackward),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected inc, noninc or fb)"
            ))),
        }
    }
}

/// Step sizes, penalty and iteration limits for one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mu_w: f64,
    pub mu_lambda: f64,
    /// `ρ` for the incremental recursion, `η` for the non-incremental one;
    /// unused by forward-backward.
    pub penalty: f64,
    pub max_iterations: usize,
    pub divergence_threshold: f64,
    /// Stop once the relative error (or, without a reference, the relative
    /// primal displacement) falls to this level. `None` runs to the limit.
    pub stop_tolerance: Option<f64>,
    pub w_init: Option<DVector<f64>>,
    pub lambda_init: Option<DVector<f64>>,
}

impl SolverConfig {
    pub fn new(mu_w: f64, mu_lambda: f64) -> Self {
        Self {
            mu_w,
            mu_lambda,
            penalty: 0.0,
            max_iterations: 1000,
            divergence_threshold: 1e8,
            stop_tolerance: Some(1e-10),
            w_init: None,
            lambda_init: None,
        }
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_stop_tolerance(mut self, tol: Option<f64>) -> Self {
        self.stop_tolerance = tol;
        self
    }

    pub fn with_init(mut self, w: DVector<f64>, lambda: DVector<f64>) -> Self {
        self.w_init = Some(w);
        self.lambda_init = Some(lambda);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_w > 0.0 && self.mu_w.is_finite()) {
            return Err(Error::Config(format!("mu_w must be positive, got {}", self.mu_w)));
        }
        if !(self.mu_lambda > 0.0 && self.mu_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "mu_lambda must be positive, got {}",
                self.mu_lambda
            )));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config(format!(
                "penalty must be nonnegative, got {}",
                self.penalty
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::Config("divergence_threshold must be positive".into()));
        }
        Ok(())
    }

    /// Initial state, zero where no initialization was given.
    pub fn initial_state(&self, dim_primal: usize, dim_dual: usize) -> Result<SolverState> {
        let w = self.w_init.clone().unwrap_or_else(|| DVector::zeros(dim_primal));
        let lambda = self.lambda_init.clone().unwrap_or_else(|| DVector::zeros(dim_dual));
        if w.len() != dim_primal || lambda.len() != dim_dual {
            return Err(Error::Dimension(format!(
                "initial state has sizes ({}, {}), problem needs ({dim_primal}, {dim_dual})",
                w.len(),
                lambda.len()
            )));
        }
        Ok(SolverState {
            w,
            lambda,
            iteration: 0,
        })
    }
}

/// Current primal-dual iterate. For the non-incremental and forward-backward
/// recursions `lambda` holds their own dual variable `λ′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub w: DVector<f64>,
    pub lambda: DVector<f64>,
    pub iteration: usize,
}

impl SolverState {
    pub fn new(w: DVector<f64>, lambda: DVector<f64>) -> Self {
        Self {
            w,
            lambda,
            iteration: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.lambda.iter()).all(|v| v.is_finite())
    }
}
