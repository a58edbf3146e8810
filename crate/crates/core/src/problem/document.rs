use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{EqualityConstrainedProblem, QuadraticCost};
use crate::error::{Error, Result};

/// JSON form of a quadratic problem. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "R")]
    pub quadratic: Vec<Vec<f64>>,
    #[serde(rename = "r")]
    pub linear: Vec<f64>,
    #[serde(rename = "B")]
    pub constraint_matrix: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub constraint_rhs: Vec<f64>,
}

fn rows_of(matrix: &DMatrix<f64>) -> Vec<Vec<f64>> {
    matrix.row_iter().map(|row| row.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{name} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ProblemDocument {
    pub fn from_problem(problem: &EqualityConstrainedProblem<QuadraticCost>) -> Self {
        Self {
            m: problem.dim_primal(),
            e: problem.dim_constraints(),
            quadratic: rows_of(problem.cost().quadratic_term()),
            linear: problem.cost().linear_term().iter().copied().collect(),
            constraint_matrix: rows_of(problem.constraint_matrix()),
            constraint_rhs: problem.constraint_rhs().iter().copied().collect(),
        }
    }

    pub fn into_problem(self) -> Result<EqualityConstrainedProblem<QuadraticCost>> {
        let r = matrix_from_rows(&self.quadratic, self.m, self.m, "R")?;
        let b = matrix_from_rows(&self.constraint_matrix, self.e, self.m, "B")?;
        if self.linear.len() != self.m {
            return Err(Error::Parse(format!("r must have length {}", self.m)));
        }
        if self.constraint_rhs.len() != self.e {
            return Err(Error::Parse(format!("b must have length {}", self.e)));
        }
        let cost = QuadraticCost::new(r, DVector::from_vec(self.linear))?;
        EqualityConstrainedProblem::new(cost, b, DVector::from_vec(self.constraint_rhs))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
