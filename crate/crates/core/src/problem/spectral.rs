use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular-value summary of a constraint matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    pub sigma_max: f64,
    /// Largest `s` with `‖Bx‖ ≥ s‖x‖` for every `x`; zero when `B` is wide.
    pub sigma_min: f64,
    /// Smallest singular value above `rank_tolerance` (σ̲).
    pub sigma_min_nonzero: f64,
    pub rank: usize,
    /// Descending, `min(E, M)` entries.
    pub singular_values: Vec<f64>,
    pub rank_tolerance: f64,
}

impl SpectralInfo {
    pub fn sigma_max_sq(&self) -> f64 {
        self.sigma_max * self.sigma_max
    }

    pub fn sigma_min_sq(&self) -> f64 {
        self.sigma_min * self.sigma_min
    }

    pub fn sigma_min_nonzero_sq(&self) -> f64 {
        self.sigma_min_nonzero * self.sigma_min_nonzero
    }
}

/// Full-rank-revealing SVD. `B` is padded with zero rows when wide so the
/// right factor always spans all of `R^M`.
pub(crate) struct Decomposition {
    /// Left singular vectors, E x min(E,M) columns (of the unpadded matrix).
    pub u: DMatrix<f64>,
    /// Right singular vectors as columns, M x M.
    pub v: DMatrix<f64>,
    /// Descending singular values, length min(E, M).
    pub values: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
}

impl Decomposition {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let (e, m) = matrix.shape();
        let padded = if e < m {
            let mut p = DMatrix::zeros(m, m);
            p.view_mut((0, 0), (e, m)).copy_from(matrix);
            p
        } else {
            matrix.clone()
        };
        let svd = SVD::new(padded, true, true);
        let u_full = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

        let k = e.min(m);
        let values: Vec<f64> = order.iter().take(k).map(|&i| svd.singular_values[i]).collect();
        let mut u = DMatrix::zeros(e, k);
        for (col, &i) in order.iter().take(k).enumerate() {
            u.set_column(col, &u_full.view((0, i), (e, 1)).column(0));
        }
        let mut v = DMatrix::zeros(m, m);
        for (col, &i) in order.iter().enumerate() {
            v.set_column(col, &v_t.row(i).transpose());
        }
        let sigma_max = values.first().copied().unwrap_or(0.0);
        let tolerance = sigma_max * (e.max(m) as f64) * f64::EPSILON;
        let rank = values.iter().filter(|&&s| s > tolerance).count();
        Self {
            u,
            v,
            values,
            rank,
            tolerance,
        }
    }

    /// Orthonormal basis of `Null(B)`, M x (M - rank).
    pub fn null_space(&self) -> DMatrix<f64> {
        let m = self.v.nrows();
        self.v.columns(self.rank, m - self.rank).into_owned()
    }

    /// Minimum-norm least-squares solution of `Bx = y`.
    pub fn solve_min_norm(&self, y: &DVector<f64>) -> DVector<f64> {
        let m = self.v.nrows();
        let mut x = DVector::zeros(m);
        for i in 0..self.rank {
            let coeff = self.u.column(i).dot(y) / self.values[i];
            x.axpy(coeff, &self.v.column(i), 1.0);
        }
        x
    }

    /// Minimum-norm least-squares solution of `Bᵀλ = g`.
    pub fn solve_transpose_min_norm(&self, g: &DVector<f64>) -> DVector<f64> {
        let e = self.u.nrows();
        let mut lambda = DVector::zeros(e);
        for i in 0..self.rank {
            let coeff = self.v.column(i).dot(g) / self.values[i];
            lambda.axpy(coeff, &self.u.column(i), 1.0);
        }
        lambda
    }

    /// `U_r U_rᵀ`, the orthogonal projector onto `Range(B)`.
    pub fn range_projector(&self) -> DMatrix<f64> {
        let ur = self.u.columns(0, self.rank);
        &ur * ur.transpose()
    }

    #[cfg(test)]
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let e = self.u.nrows();
        let m = self.v.nrows();
        let mut out = DMatrix::zeros(e, m);
        for i in 0..self.values.len() {
            out += self.u.column(i) * self.v.column(i).transpose() * self.values[i];
        }
        out
    }
}

/// Singular-value summary of `matrix`, with numerical rank taken against
/// `σ_max · max(E, M) · ε`.
pub fn spectral_quantities(matrix: &DMatrix<f64>) -> Result<SpectralInfo> {
    if matrix.is_empty() {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if matrix.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let dec = Decomposition::new(matrix);
    let sigma_max = dec.values[0];
    let sigma_min_nonzero = dec.values[dec.rank - 1];
    let (e, m) = matrix.shape();
    let sigma_min = if e < m {
        0.0
    } else {
        *dec.values.last().expect("nonempty")
    };
    Ok(SpectralInfo {
        sigma_max,
        sigma_min,
        sigma_min_nonzero,
        rank: dec.rank,
        singular_values: dec.values,
        rank_tolerance: dec.tolerance,
    })
}

/// Orthogonal projector onto `Range(matrix)`.
pub fn range_projector(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    Decomposition::new(matrix).range_projector()
}

pub fn project_onto_range(matrix: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    range_projector(matrix) * v
}

pub(crate) fn least_squares_residual(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> f64 {
    // ‖(I − U_rU_rᵀ)b‖ equals ‖Bx − b‖ at the least-squares solution without
    // dividing by small singular values.
    let dec = Decomposition::new(matrix);
    let ur = dec.u.columns(0, dec.rank);
    (rhs - &ur * (ur.transpose() * rhs)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn identity() {
        let info = spectral_quantities(&DMatrix::identity(2, 2)).unwrap();
        assert!(close(info.sigma_max, 1.0));
        assert!(close(info.sigma_min, 1.0));
        assert!(close(info.sigma_min_nonzero, 1.0));
        assert_eq!(info.rank, 2);
    }

    #[test]
    fn diagonal() {
        let b = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let info = spectral_quantities(&b).unwrap();
        assert!(close(info.sigma_max, 4.0));
        assert!(close(info.sigma_min, 3.0));
        assert!(close(info.sigma_min_nonzero, 3.0));
        assert_eq!(info.rank, 2);
    }

    #[test]
    fn rank_deficient() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let info = spectral_quantities(&b).unwrap();
        assert!(close(info.sigma_max, 2f64.sqrt()));
        assert!(info.sigma_min.abs() < 1e-15);
        assert!(close(info.sigma_min_nonzero, 2f64.sqrt()));
        assert_eq!(info.rank, 1);
    }

    #[test]
    fn wide_matrix_has_zero_sigma_min() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let info = spectral_quantities(&b).unwrap();
        assert_eq!(info.sigma_min, 0.0);
        assert!(close(info.sigma_min_nonzero, 1.0));
        assert_eq!(info.singular_values.len(), 1);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let err = spectral_quantities(&DMatrix::zeros(2, 3)).unwrap_err();
        assert_eq!(err.to_string(), "zero matrix has no σ̲");
    }

    #[test]
    fn reconstruction_and_null_space() {
        let b = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 3.0, 1.0]);
        let dec = Decomposition::new(&b);
        let rel = (dec.reconstruct() - &b).norm() / b.norm();
        assert!(rel <= 1e-12, "{rel}");
        let z = dec.null_space();
        assert_eq!(z.ncols(), 2);
        assert!((&b * &z).amax() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
        let p = range_projector(&b);
        assert!((&p * &p - &p).amax() < 1e-12);
        assert!((&p * &b - &b).amax() < 1e-12);
    }
}
