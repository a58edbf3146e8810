use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A smooth cost with an analytic gradient.
pub trait CostFunction {
    fn dim(&self) -> usize;

    fn value(&self, w: &DVector<f64>) -> f64;

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64>;

    /// Constant Hessian, when the cost has one.
    fn hessian(&self) -> Option<DMatrix<f64>> {
        None
    }
}

/// `J(w) = wᵀRw + rᵀw` with `R` stored symmetric, so `∇J(w) = 2Rw + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    quadratic: DMatrix<f64>,
    linear: DVector<f64>,
}

impl QuadraticCost {
    /// Symmetrizes `R` as `(R + Rᵀ)/2`.
    pub fn new(quadratic: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let (rows, cols) = quadratic.shape();
        if rows != cols {
            return Err(Error::Dimension(format!("R must be square, got {rows}x{cols}")));
        }
        if rows == 0 {
            return Err(Error::Dimension("R must be nonempty".into()));
        }
        if linear.len() != rows {
            return Err(Error::Dimension(format!(
                "linear term length {} does not match R of size {}",
                linear.len(),
                rows
            )));
        }
        if quadratic.iter().chain(linear.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let quadratic = (&quadratic + quadratic.transpose()) * 0.5;
        Ok(Self { quadratic, linear })
    }

    pub fn diagonal(diag: &[f64], linear: DVector<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), linear)
    }

    pub fn quadratic_term(&self) -> &DMatrix<f64> {
        &self.quadratic
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.linear
    }

    /// Eigenvalues of the Hessian `2R`, ascending.
    pub fn hessian_eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = (&self.quadratic * 2.0)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// `λ_max(2R)`.
    pub fn smoothness(&self) -> f64 {
        *self.hessian_eigenvalues().last().expect("nonempty")
    }

    /// `λ_min(2R)`, negative for indefinite costs.
    pub fn min_curvature(&self) -> f64 {
        self.hessian_eigenvalues()[0]
    }
}

impl CostFunction for QuadraticCost {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.quadratic * w)) + self.linear.dot(w)
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut grad = self.linear.clone();
        grad.gemv(2.0, &self.quadratic, w, 1.0);
        grad
    }

    fn hessian(&self) -> Option<DMatrix<f64>> {
        Some(&self.quadratic * 2.0)
    }
}

/// Relative error between the analytic gradient and central finite
/// differences at `w`, with step `1e-6·(1+‖w‖)`.
pub fn gradient_check<C: CostFunction + ?Sized>(cost: &C, w: &DVector<f64>) -> f64 {
    let h = 1e-6 * (1.0 + w.norm());
    let analytic = cost.gradient(w);
    let mut numeric = DVector::zeros(w.len());
    let mut probe = w.clone();
    for i in 0..w.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = cost.value(&probe);
        probe[i] = orig - h;
        let down = cost.value(&probe);
        probe[i] = orig;
        numeric[i] = (up - down) / (2.0 * h);
    }
    (analytic - &numeric).norm() / (1.0 + numeric.norm())
}
