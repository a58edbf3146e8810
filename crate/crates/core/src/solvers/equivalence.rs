use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{CostFunction, EqualityConstrainedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EquivalenceRegime {
    /// `η ≥ μ_λ`: an ordinary incremental run with `ρ = η − μ_λ ≥ 0`.
    Penalized,
    /// `η < μ_λ`: the equivalent penalty is negative. Analyse it as an
    /// unpenalized run on `J − ((μ_λ − η)/2)‖Bw − b‖²` via
    /// [`shifted_constants`](super::shifted_constants).
    ShiftedCost,
}

/// Incremental parameters reproducing a non-incremental (or forward-backward)
/// primal trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementalEquivalent {
    pub rho: f64,
    pub lambda_init: DVector<f64>,
    pub regime: EquivalenceRegime,
}

/// Non-incremental `(η, μ_λ, λ′₋₁)` to incremental `(ρ, λ₋₁)`:
/// `ρ = η − μ_λ` and `λ₋₁ = λ′₋₁ + μ_λ(Bw₋₁ − b)`.
pub fn to_incremental_equivalent<C: CostFunction>(
    eta: f64,
    mu_lambda: f64,
    w_init: &DVector<f64>,
    lambda_prime_init: &DVector<f64>,
    problem: &EqualityConstrainedProblem<C>,
) -> Result<IncrementalEquivalent> {
    if w_init.len() != problem.dim_primal() || lambda_prime_init.len() != problem.dim_constraints() {
        return Err(Error::Dimension("initial state does not match problem".into()));
    }
    let rho = eta - mu_lambda;
    let lambda_init = lambda_prime_init + problem.constraint_residual(w_init) * mu_lambda;
    let regime = if rho >= 0.0 {
        EquivalenceRegime::Penalized
    } else {
        EquivalenceRegime::ShiftedCost
    };
    Ok(IncrementalEquivalent {
        rho,
        lambda_init,
        regime,
    })
}

/// Forward-backward `(μ_λ, λ′₋₁)` to incremental `(ρ = μ_λ, λ₋₁ = λ′₋₁ − μ_λBw₋₁)`.
pub fn forward_backward_equivalent<C: CostFunction>(
    mu_lambda: f64,
    w_init: &DVector<f64>,
    lambda_prime_init: &DVector<f64>,
    problem: &EqualityConstrainedProblem<C>,
) -> Result<IncrementalEquivalent> {
    if !problem.is_homogeneous() {
        return Err(Error::NonHomogeneousConstraint);
    }
    if w_init.len() != problem.dim_primal() || lambda_prime_init.len() != problem.dim_constraints() {
        return Err(Error::Dimension("initial state does not match problem".into()));
    }
    let mut lambda_init = lambda_prime_init.clone();
    lambda_init.gemv(-mu_lambda, problem.constraint_matrix(), w_init, 1.0);
    Ok(IncrementalEquivalent {
        rho: mu_lambda,
        lambda_init,
        regime: EquivalenceRegime::Penalized,
    })
}
