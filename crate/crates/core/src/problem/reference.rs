use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spectral::Decomposition;
use super::{CostFunction, EqualityConstrainedProblem, QuadraticCost};
use crate::error::{Error, Result};

/// Consistency tolerance for `Bᵀλ = -∇J(w★)`, relative to `1 + ‖∇J(w★)‖`.
const STATIONARITY_TOL: f64 = 1e-8;

/// A saddle point `(w★, λ★_b)` with `λ★_b` in `Range(B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReference {
    pub w_star: DVector<f64>,
    pub lambda_star_b: DVector<f64>,
    /// `‖∇J(w★) + Bᵀλ★_b‖`
    pub kkt_stationarity_residual: f64,
    /// `‖Bw★ - b‖`
    pub kkt_feasibility_residual: f64,
}

impl SaddleReference {
    /// Builds a reference from a known primal optimum, deriving the
    /// range-space dual and the residuals.
    pub fn from_primal<C: CostFunction>(problem: &EqualityConstrainedProblem<C>, w_star: DVector<f64>) -> Result<Self> {
        let grad = problem.cost().gradient(&w_star);
        let lambda = range_space_dual(&grad, problem.constraint_matrix())?;
        Ok(Self::with_residuals(problem, w_star, lambda))
    }

    pub(crate) fn with_residuals<C: CostFunction>(
        problem: &EqualityConstrainedProblem<C>,
        w_star: DVector<f64>,
        lambda_star_b: DVector<f64>,
    ) -> Self {
        let b = problem.constraint_matrix();
        let mut stationarity = problem.cost().gradient(&w_star);
        stationarity.gemv_tr(1.0, b, &lambda_star_b, 1.0);
        let feasibility = problem.constraint_residual(&w_star).norm();
        Self {
            kkt_stationarity_residual: stationarity.norm(),
            kkt_feasibility_residual: feasibility,
            w_star,
            lambda_star_b,
        }
    }

    pub fn dim_primal(&self) -> usize {
        self.w_star.len()
    }

    pub fn dim_dual(&self) -> usize {
        self.lambda_star_b.len()
    }
}

/// Minimum-norm solution of `Bᵀλ = -∇J(w★)`; it is the unique solution in
/// `Range(B)`.
pub fn range_space_dual(gradient_at_wstar: &DVector<f64>, matrix: &DMatrix<f64>) -> Result<DVector<f64>> {
    if gradient_at_wstar.len() != matrix.ncols() {
        return Err(Error::Dimension(format!(
            "gradient length {} does not match B with {} columns",
            gradient_at_wstar.len(),
            matrix.ncols()
        )));
    }
    if gradient_at_wstar.iter().all(|&g| g == 0.0) {
        return Ok(DVector::zeros(matrix.nrows()));
    }
    let dec = Decomposition::new(matrix);
    let lambda = -dec.solve_transpose_min_norm(gradient_at_wstar);
    let mut residual = gradient_at_wstar.clone();
    residual.gemv_tr(1.0, matrix, &lambda, 1.0);
    let residual = residual.norm();
    if residual > STATIONARITY_TOL * (1.0 + gradient_at_wstar.norm()) {
        return Err(Error::NotStationary { residual });
    }
    Ok(lambda)
}

/// Solves the KKT system of a quadratic problem by the null-space method:
/// `w★ = w_p + Z y` with `w_p = B⁺b`, `Z` a basis of `Null(B)` and
/// `(Zᵀ 2R Z) y = -Zᵀ(2R w_p + r)`. The reduced Hessian must be positive
/// definite, otherwise the constrained minimizer is not unique.
pub fn solve_kkt_reference(problem: &EqualityConstrainedProblem<QuadraticCost>) -> Result<SaddleReference> {
    let b = problem.constraint_matrix();
    let rhs = problem.constraint_rhs();
    let cost = problem.cost();
    let hessian = cost.quadratic_term() * 2.0;

    let dec = Decomposition::new(b);
    if dec.rank == 0 {
        return Err(Error::ZeroMatrix);
    }
    let w_particular = dec.solve_min_norm(rhs);
    let z = dec.null_space();

    let w_star = if z.ncols() == 0 {
        w_particular
    } else {
        let reduced = z.transpose() * &hessian * &z;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = reduced.clone().symmetric_eigenvalues();
        let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = hessian.norm().max(f64::MIN_POSITIVE);
        if min_eig <= 1e-10 * scale {
            return Err(Error::NoUniqueMinimizer(format!(
                "reduced Hessian on Null(B) has eigenvalue {min_eig:e}"
            )));
        }
        let chol = reduced
            .cholesky()
            .ok_or_else(|| Error::NoUniqueMinimizer("reduced Hessian is not positive definite".into()))?;
        let grad_p = cost.gradient(&w_particular);
        let y = chol.solve(&(-(z.transpose() * grad_p)));
        let mut w = w_particular + &z * y;
        // one refinement pass on the reduced stationarity condition
        let correction = chol.solve(&(-(z.transpose() * cost.gradient(&w))));
        w += &z * correction;
        w
    };

    let grad = cost.gradient(&w_star);
    let lambda = if grad.iter().all(|&g| g == 0.0) {
        DVector::zeros(b.nrows())
    } else {
        let lambda = -dec.solve_transpose_min_norm(&grad);
        let mut residual = grad.clone();
        residual.gemv_tr(1.0, b, &lambda, 1.0);
        let residual = residual.norm();
        if residual > STATIONARITY_TOL * (1.0 + grad.norm()) {
            return Err(Error::NotStationary { residual });
        }
        lambda
    };
    Ok(SaddleReference::with_residuals(problem, w_star, lambda))
}
