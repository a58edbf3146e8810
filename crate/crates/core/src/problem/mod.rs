//! Equality-constrained problems `min J(w) s.t. Bw = b`, quadratic costs,
//! spectral summaries of constraint matrices and reference saddle points.

mod cost;
mod document;
mod reference;
mod regularity;
mod spectral;

pub use cost::{gradient_check, CostFunction, QuadraticCost};
pub use document::ProblemDocument;
pub use reference::{range_space_dual, solve_kkt_reference, SaddleReference};
pub use regularity::{verify_regularity, HessianCheck, RegularityConstants, RegularityReport, SampleCheck};
pub use spectral::{project_onto_range, range_projector, spectral_quantities, SpectralInfo};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the feasibility check performed at construction.
const FEASIBILITY_TOL: f64 = 1e-9;

/// `minimize J(w) subject to Bw = b`.
#[derive(Debug, Clone)]
pub struct EqualityConstrainedProblem<C = QuadraticCost> {
    cost: C,
    constraint_matrix: DMatrix<f64>,
    constraint_rhs: DVector<f64>,
}

impl<C: CostFunction> EqualityConstrainedProblem<C> {
    /// Builds a problem after checking dimensions, finiteness and that `b`
    /// lies in the range of `B`.
    pub fn new(cost: C, constraint_matrix: DMatrix<f64>, constraint_rhs: DVector<f64>) -> Result<Self> {
        let (e, m) = constraint_matrix.shape();
        if e == 0 || m == 0 {
            return Err(Error::Dimension("constraint matrix must be nonempty".into()));
        }
        if cost.dim() != m {
            return Err(Error::Dimension(format!(
                "cost dimension {} does not match constraint columns {}",
                cost.dim(),
                m
            )));
        }
        if constraint_rhs.len() != e {
            return Err(Error::Dimension(format!(
                "rhs length {} does not match constraint rows {}",
                constraint_rhs.len(),
                e
            )));
        }
        if constraint_matrix
            .iter()
            .chain(constraint_rhs.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        // A homogeneous system is always feasible; skip the SVD.
        if constraint_rhs.iter().any(|&v| v != 0.0) {
            let residual = spectral::least_squares_residual(&constraint_matrix, &constraint_rhs);
            if residual > FEASIBILITY_TOL * (1.0 + constraint_rhs.norm()) {
                return Err(Error::Infeasible { residual });
            }
        }
        Ok(Self {
            cost,
            constraint_matrix,
            constraint_rhs,
        })
    }

    pub fn dim_primal(&self) -> usize {
        self.constraint_matrix.ncols()
    }

    pub fn dim_constraints(&self) -> usize {
        self.constraint_matrix.nrows()
    }

    pub fn cost(&self) -> &C {
        &self.cost
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.constraint_matrix
    }

    pub fn constraint_rhs(&self) -> &DVector<f64> {
        &self.constraint_rhs
    }

    pub fn is_homogeneous(&self) -> bool {
        self.constraint_rhs.iter().all(|&v| v == 0.0)
    }

    /// `Bw - b`
    pub fn constraint_residual(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.constraint_matrix * w - &self.constraint_rhs
    }

    /// Gradient of the penalized cost `J(w) + rho/2 ‖Bw - b‖²`.
    pub fn penalized_gradient(&self, w: &DVector<f64>, rho: f64) -> DVector<f64> {
        let mut grad = self.cost.gradient(w);
        if rho != 0.0 {
            let residual = self.constraint_residual(w);
            grad.gemv_tr(rho, &self.constraint_matrix, &residual, 1.0);
        }
        grad
    }

    /// Value of the augmented Lagrangian `J(w) + rho/2 ‖Bw-b‖² + λᵀ(Bw-b)`.
    pub fn augmented_lagrangian(&self, w: &DVector<f64>, lambda: &DVector<f64>, rho: f64) -> f64 {
        let residual = self.constraint_residual(w);
        self.cost.value(w) + 0.5 * rho * residual.norm_squared() + lambda.dot(&residual)
    }
}

impl EqualityConstrainedProblem<QuadraticCost> {
    pub fn to_document(&self) -> ProblemDocument {
        ProblemDocument::from_problem(self)
    }
}
