use nalgebra::DVector;

use super::{Method, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::problem::{CostFunction, EqualityConstrainedProblem};

fn finish(previous: &SolverState, w: DVector<f64>, lambda: DVector<f64>) -> Result<SolverState> {
    let next = SolverState {
        w,
        lambda,
        iteration: previous.iteration + 1,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged {
            last_finite: Box::new(previous.clone()),
        })
    }
}

fn check_dims<C: CostFunction>(problem: &EqualityConstrainedProblem<C>, state: &SolverState) -> Result<()> {
    if state.w.len() != problem.dim_primal() || state.lambda.len() != problem.dim_constraints() {
        return Err(Error::Dimension(format!(
            "state sizes ({}, {}) do not match problem ({}, {})",
            state.w.len(),
            state.lambda.len(),
            problem.dim_primal(),
            problem.dim_constraints()
        )));
    }
    Ok(())
}

/// Primal descent on `J_ρ + λᵀ(Bw - b)`, then dual ascent with the new `w_i`.
pub fn incremental_step<C: CostFunction>(
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    state: &SolverState,
) -> Result<SolverState> {
    check_dims(problem, state)?;
    let b = problem.constraint_matrix();
    let mut direction = problem.penalized_gradient(&state.w, config.penalty);
    direction.gemv_tr(1.0, b, &state.lambda, 1.0);
    let w = &state.w - direction * config.mu_w;
    let lambda = &state.lambda + problem.constraint_residual(&w) * config.mu_lambda;
    finish(state, w, lambda)
}

/// Arrow-Hurwicz step: the dual ascent uses the previous primal `w_{i-1}`.
/// `config.penalty` is `η`.
pub fn nonincremental_step<C: CostFunction>(
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    state: &SolverState,
) -> Result<SolverState> {
    check_dims(problem, state)?;
    let b = problem.constraint_matrix();
    let mut direction = problem.penalized_gradient(&state.w, config.penalty);
    direction.gemv_tr(1.0, b, &state.lambda, 1.0);
    let w = &state.w - direction * config.mu_w;
    let lambda = &state.lambda + problem.constraint_residual(&state.w) * config.mu_lambda;
    finish(state, w, lambda)
}

/// Forward-backward step with dual ascent on `B(2w_i - w_{i-1})`.
pub fn forward_backward_step<C: CostFunction>(
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    state: &SolverState,
) -> Result<SolverState> {
    if !problem.is_homogeneous() {
        return Err(Error::NonHomogeneousConstraint);
    }
    check_dims(problem, state)?;
    let b = problem.constraint_matrix();
    let mut direction = problem.cost().gradient(&state.w);
    direction.gemv_tr(1.0, b, &state.lambda, 1.0);
    let w = &state.w - direction * config.mu_w;
    let extrapolated = &w * 2.0 - &state.w;
    let mut lambda = state.lambda.clone();
    lambda.gemv(config.mu_lambda, b, &extrapolated, 1.0);
    finish(state, w, lambda)
}

pub fn step<C: CostFunction>(
    method: Method,
    problem: &EqualityConstrainedProblem<C>,
    config: &SolverConfig,
    state: &SolverState,
) -> Result<SolverState> {
    match method {
        Method::Incremental => incremental_step(problem, config, state),
        Method::NonIncremental => nonincremental_step(problem, config, state),
        Method::ForwardBackward => forward_backward_step(problem, config, state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{solve_kkt_reference, QuadraticCost};
    use nalgebra::DMatrix;

    fn scalar_problem(rhs: f64) -> EqualityConstrainedProblem {
        let cost = QuadraticCost::diagonal(&[0.5], DVector::zeros(1)).unwrap();
        EqualityConstrainedProblem::new(cost, DMatrix::identity(1, 1), DVector::from_element(1, rhs)).unwrap()
    }

    fn start() -> SolverState {
        SolverState::new(DVector::from_element(1, 1.0), DVector::zeros(1))
    }

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }

    #[test]
    fn incremental_hand_values() {
        let p = scalar_problem(0.0);
        let next = incremental_step(&p, &SolverConfig::new(0.1, 0.1), &start()).unwrap();
        assert_close(next.w[0], 0.9);
        assert_close(next.lambda[0], 0.09);
        assert_eq!(next.iteration, 1);

        let next = incremental_step(&p, &SolverConfig::new(0.1, 0.1).with_penalty(1.0), &start()).unwrap();
        assert_close(next.w[0], 0.8);
        assert_close(next.lambda[0], 0.08);
    }

    #[test]
    fn nonincremental_hand_values() {
        let p = scalar_problem(0.0);
        let next = nonincremental_step(&p, &SolverConfig::new(0.1, 0.1), &start()).unwrap();
        assert_close(next.w[0], 0.9);
        assert_close(next.lambda[0], 0.1);

        let next = nonincremental_step(&p, &SolverConfig::new(0.1, 0.1).with_penalty(0.2), &start()).unwrap();
        assert_close(next.w[0], 0.88);
        assert_close(next.lambda[0], 0.1);
    }

    #[test]
    fn forward_backward_hand_values() {
        let p = scalar_problem(0.0);
        let next = forward_backward_step(&p, &SolverConfig::new(0.1, 0.1), &start()).unwrap();
        assert_close(next.w[0], 0.9);
        assert_close(next.lambda[0], 0.08);
    }

    #[test]
    fn forward_backward_rejects_nonzero_rhs() {
        let p = scalar_problem(1.0);
        let err = forward_backward_step(&p, &SolverConfig::new(0.1, 0.1), &start()).unwrap_err();
        assert_eq!(
            err.to_string(),
            "forward-backward requires homogeneous constraint (b = 0)"
        );
    }

    #[test]
    fn saddle_point_is_fixed_for_all_methods() {
        let cost = QuadraticCost::new(
            DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5]),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
        )
        .unwrap();
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, -1.0]);
        for rhs in [DVector::from_vec(vec![1.0, 0.5]), DVector::zeros(2)] {
            let p = EqualityConstrainedProblem::new(cost.clone(), b.clone(), rhs).unwrap();
            let reference = solve_kkt_reference(&p).unwrap();
            let state = SolverState::new(reference.w_star.clone(), reference.lambda_star_b.clone());
            let config = SolverConfig::new(0.1, 0.2).with_penalty(0.5);
            let methods: &[Method] = if p.is_homogeneous() {
                &[Method::Incremental, Method::NonIncremental, Method::ForwardBackward]
            } else {
                &[Method::Incremental, Method::NonIncremental]
            };
            for &method in methods {
                let next = step(method, &p, &config, &state).unwrap();
                assert!((&next.w - &state.w).amax() < 1e-14, "{method}");
                assert!((&next.lambda - &state.lambda).amax() < 1e-14, "{method}");
            }
        }
    }

    #[test]
    fn non_finite_step_reports_last_state() {
        let cost = QuadraticCost::diagonal(&[1e300], DVector::zeros(1)).unwrap();
        let p = EqualityConstrainedProblem::new(cost, DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        let state = SolverState::new(DVector::from_element(1, 1e10), DVector::zeros(1));
        match incremental_step(&p, &SolverConfig::new(1.0, 1.0), &state) {
            Err(Error::Diverged { last_finite }) => assert_eq!(*last_finite, state),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
