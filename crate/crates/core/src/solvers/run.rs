use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    step, Method, RateReport, SolverConfig, SolverState, StepSizeBounds, TerminationStatus, Trace, TraceRecord,
};
use crate::error::{Error, Result};
use crate::problem::{range_projector, spectral_quantities, CostFunction, EqualityConstrainedProblem, SaddleReference};

/// JSON sidecar written next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub method: Method,
    pub mu_w: f64,
    pub mu_lambda: f64,
    pub penalty: f64,
    pub max_iterations: usize,
    pub stop_tolerance: Option<f64>,
    pub status: TerminationStatus,
    pub iterations: usize,
    pub bounds: Option<StepSizeBounds>,
    pub rate: Option<RateReport>,
    pub final_rel_error: Option<f64>,
}

impl RunMetadata {
    pub fn new(trace: &Trace, config: &SolverConfig, bounds: Option<StepSizeBounds>, rate: Option<RateReport>) -> Self {
        Self {
            method: trace.method,
            mu_w: config.mu_w,
            mu_lambda: config.mu_lambda,
            penalty: config.penalty,
            max_iterations: config.max_iterations,
            stop_tolerance: config.stop_tolerance,
            status: trace.status,
            iterations: trace.iterations(),
            bounds,
            rate,
            final_rel_error: trace.last().rel_error,
        }
    }
}

struct Recorder<'a> {
    reference: Option<&'a SaddleReference>,
    w_star_norm_sq: f64,
    projector: nalgebra::DMatrix<f64>,
    c_w: f64,
    c_lambda: f64,
}

impl Recorder<'_> {
    fn record(&self, iteration: usize, w: &DVector<f64>, dual: &DVector<f64>) -> TraceRecord {
        let range_residual = (dual - &self.projector * dual).norm();
        match self.reference {
            Some(reference) => {
                let primal = (w - &reference.w_star).norm_squared();
                let dual_err = (dual - &reference.lambda_star_b).norm_squared();
                let rel = if self.w_star_norm_sq > 0.0 {
                    primal / self.w_star_norm_sq
                } else {
                    primal
                };
                TraceRecord {
                    iteration,
                    primal_err_sq: Some(primal),
                    dual_err_sq: Some(dual_err),
                    lyapunov: Some(self.c_w * primal + self.c_lambda * dual_err),
                    range_residual,
                    rel_error: Some(rel),
                }
            }
            None => TraceRecord {
                iteration,
                primal_err_sq: None,
                dual_err_sq: None,
                lyapunov: None,
                range_residual,
                rel_error: None,
            },
        }
    }
}

/// Dual of the incremental recursion that has the same primal trajectory.
fn equivalent_dual<C: CostFunction>(
    method: Method,
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    state: &SolverState,
) -> DVector<f64> {
    match method {
        Method::Incremental => state.lambda.clone(),
        Method::NonIncremental => &state.lambda + problem.constraint_residual(&state.w) * config.mu_lambda,
        Method::ForwardBackward => {
            let mut lambda = state.lambda.clone();
            lambda.gemv(-config.mu_lambda, problem.constraint_matrix(), &state.w, 1.0);
            lambda
        }
    }
}

/// Iterates `method` until the stop tolerance, the iteration limit or
/// divergence (non-finite values, or `‖w‖`/`‖λ‖` above the threshold).
///
/// The Lyapunov weights are `c_w = 1 − μ_wμ_λσ_max²(B)` and `c_λ = μ_w/μ_λ`.
pub fn run_solver<C: CostFunction>(
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    method: Method,
    reference: Option<&SaddleReference>,
) -> Result<Trace> {
    config.validate()?;
    if method == Method::ForwardBackward && !problem.is_homogeneous() {
        return Err(Error::NonHomogeneousConstraint);
    }
    if let Some(r) = reference {
        if r.dim_primal() != problem.dim_primal() || r.dim_dual() != problem.dim_constraints() {
            return Err(Error::Dimension("reference does not match problem".into()));
        }
    }
    let spectral = spectral_quantities(problem.constraint_matrix())?;
    let c_w = 1.0 - config.mu_w * config.mu_lambda * spectral.sigma_max_sq();
    let c_lambda = config.mu_w / config.mu_lambda;
    let recorder = Recorder {
        reference,
        w_star_norm_sq: reference.map_or(0.0, |r| r.w_star.norm_squared()),
        projector: range_projector(problem.constraint_matrix()),
        c_w,
        c_lambda,
    };

    let mut state = config.initial_state(problem.dim_primal(), problem.dim_constraints())?;
    let mut records = Vec::with_capacity(config.max_iterations.min(1 << 16) + 1);
    let first = recorder.record(0, &state.w, &equivalent_dual(method, problem, config, &state));
    let converged_at = |rec: &TraceRecord, displacement: Option<f64>| -> bool {
        match (config.stop_tolerance, rec.rel_error, displacement) {
            (None, _, _) => false,
            (Some(tol), Some(rel), _) => rel <= tol,
            (Some(tol), None, Some(d)) => d <= tol,
            _ => false,
        }
    };
    let initially_converged = converged_at(&first, None);
    records.push(first);
    if initially_converged {
        return Ok(Trace {
            method,
            records,
            status: TerminationStatus::Converged,
            final_state: state,
            c_w,
            c_lambda,
        });
    }

    let mut status = TerminationStatus::MaxIter;
    while state.iteration < config.max_iterations {
        let next = match step(method, problem, config, &state) {
            Ok(next) => next,
            Err(Error::Diverged { last_finite }) => {
                state = *last_finite;
                status = TerminationStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let displacement = (&next.w - &state.w).norm() / (1.0 + next.w.norm());
        let dual = equivalent_dual(method, problem, config, &next);
        let rec = recorder.record(next.iteration, &next.w, &dual);
        records.push(rec);
        state = next;
        if state.w.norm() > config.divergence_threshold || state.lambda.norm() > config.divergence_threshold {
            status = TerminationStatus::Diverged;
            break;
        }
        if converged_at(&rec, Some(displacement)) {
            status = TerminationStatus::Converged;
            break;
        }
    }
    Ok(Trace {
        method,
        records,
        status,
        final_state: state,
        c_w,
        c_lambda,
    })
}
