use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Symmetric, doubly stochastic, primitive combination matrix `A = [a_sk]`
/// supported on the network's edges and diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
}

/// Outcome of each structural check on a combination matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub symmetric: bool,
    pub doubly_stochastic: bool,
    pub nonnegative: bool,
    pub respects_topology: bool,
    pub primitive: bool,
    /// `I − A` is PSD with a one-dimensional null space.
    pub simple_zero_eigenvalue: bool,
    /// Second-smallest eigenvalue of `I − A`.
    pub spectral_gap: f64,
}

impl MixingReport {
    pub fn all_ok(&self) -> bool {
        self.symmetric
            && self.doubly_stochastic
            && self.nonnegative
            && self.respects_topology
            && self.primitive
            && self.simple_zero_eigenvalue
    }
}

impl CombinationMatrix {
    /// Validates `weights` against `network`.
    pub fn new(weights: DMatrix<f64>, network: &Network) -> Result<Self> {
        let k = network.node_count();
        if weights.shape() != (k, k) {
            return Err(Error::InvalidCombinationMatrix(format!(
                "expected {k}x{k}, got {:?}",
                weights.shape()
            )));
        }
        let report = check_weights(&weights, Some(network));
        if !report.all_ok() {
            return Err(Error::InvalidCombinationMatrix(format!("{report:?}")));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn check(&self, network: &Network) -> MixingReport {
        check_weights(&self.weights, Some(network))
    }
}

/// `a_sk = 1/(1 + max(d_s, d_k))` on edges, with the diagonal absorbing the
/// remainder of each row.
pub fn metropolis_weights(network: &Network) -> Result<CombinationMatrix> {
    if !network.is_connected() {
        return Err(Error::Disconnected);
    }
    let k = network.node_count();
    let mut weights = DMatrix::zeros(k, k);
    for &(u, v) in network.edges() {
        let w = 1.0 / (1.0 + network.degree(u).max(network.degree(v)) as f64);
        weights[(u, v)] = w;
        weights[(v, u)] = w;
    }
    for node in 0..k {
        let off: f64 = network.neighbors(node).iter().map(|&s| weights[(s, node)]).sum();
        weights[(node, node)] = 1.0 - off;
    }
    CombinationMatrix::new(weights, network)
}

fn is_primitive(weights: &DMatrix<f64>) -> bool {
    // Boolean powers of the support pattern; p ≤ K suffices here.
    let k = weights.nrows();
    let support: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| weights[(i, j)] > 0.0).collect())
        .collect();
    let mut power = support.clone();
    for _ in 0..k {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for m in 0..k {
                if power[i][m] {
                    for j in 0..k {
                        next[i][j] |= support[m][j];
                    }
                }
            }
        }
        power = next;
    }
    power.iter().all(|row| row.iter().all(|&b| b))
}

pub(crate) fn check_weights(weights: &DMatrix<f64>, network: Option<&Network>) -> MixingReport {
    let k = weights.nrows();
    let symmetric = (weights - weights.transpose()).amax() <= STOCHASTIC_TOL;
    let rows_ok = weights.row_iter().all(|r| (r.sum() - 1.0).abs() <= STOCHASTIC_TOL);
    let cols_ok = weights.column_iter().all(|c| (c.sum() - 1.0).abs() <= STOCHASTIC_TOL);
    let nonnegative = weights.iter().all(|&w| w >= 0.0);
    let respects_topology =
        network.is_none_or(|net| (0..k).all(|s| (0..k).all(|t| s == t || net.is_edge(s, t) || weights[(s, t)] == 0.0)));
    let primitive = is_primitive(weights);
    let laplacian = DMatrix::identity(k, k) - weights;
    let mut eig: Vec<f64> = ((&laplacian + laplacian.transpose()) * 0.5)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    let spectral_gap = eig.get(1).copied().unwrap_or(0.0);
    let simple_zero_eigenvalue = eig[0] >= -1e-10 && eig[0].abs() <= 1e-10 && spectral_gap > 1e-10;
    MixingReport {
        symmetric,
        doubly_stochastic: rows_ok && cols_ok,
        nonnegative,
        respects_topology,
        primitive,
        simple_zero_eigenvalue,
        spectral_gap,
    }
}
