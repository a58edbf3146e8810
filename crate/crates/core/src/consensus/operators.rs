use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::CombinationMatrix;
use crate::error::{Error, Result};
use crate::problem::SpectralInfo;

/// Eigenvalues of `I − A` above `-CLIP_TOL` are clipped to zero before the
/// square root; anything below is rejected.
const CLIP_TOL: f64 = 1e-10;

/// Network operators over stacked vectors `col{w_1, …, w_K}` with blocks of
/// size `M`.
///
/// `ℬ = (I − A)^{1/2} ⊗ I_M`, `ℬ² = (I − A) ⊗ I_M`, `Ā = ½(I + A) ⊗ I_M`
/// and `ℒ = (D − Adj) ⊗ I_M` with the adjacency taken from the off-diagonal
/// support of `A`.
#[derive(Debug, Clone)]
pub struct ConsensusOperators {
    node_count: usize,
    block_dim: usize,
    combination: DMatrix<f64>,
    /// `(I − A)^{1/2}` (K x K).
    sqrt_disagreement: DMatrix<f64>,
    /// Pseudo-inverse of `I − A` (K x K).
    disagreement_pinv: DMatrix<f64>,
    /// `(s, a_sk)` for every `a_sk ≠ 0`, including `s = k`.
    mixing_neighbors: Vec<Vec<(usize, f64)>>,
    /// Graph neighbors (excluding self) from the support of `A`.
    graph_neighbors: Vec<Vec<usize>>,
    /// Ascending eigenvalues of `I − A` after clipping.
    eigenvalues: Vec<f64>,
    /// Eigenvalues of `I − A` at or below this count as zero.
    zero_tolerance: f64,
}

pub fn build_consensus_operators(combination: &CombinationMatrix, block_dim: usize) -> Result<ConsensusOperators> {
    ConsensusOperators::new(combination.weights().clone(), block_dim)
}

impl ConsensusOperators {
    pub(crate) fn new(a: DMatrix<f64>, block_dim: usize) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k || k == 0 {
            return Err(Error::InvalidCombinationMatrix(
                "combination matrix must be square".into(),
            ));
        }
        if block_dim == 0 {
            return Err(Error::Dimension("block dimension must be positive".into()));
        }
        let disagreement = DMatrix::identity(k, k) - &a;
        let sym = (&disagreement + disagreement.transpose()) * 0.5;
        let SymmetricEigen {
            eigenvectors,
            eigenvalues,
        } = SymmetricEigen::new(sym);
        let mut eig: Vec<f64> = Vec::with_capacity(k);
        for &value in eigenvalues.iter() {
            if value < -CLIP_TOL {
                return Err(Error::InvalidCombinationMatrix(
                    "I−A not PSD; invalid combination matrix".into(),
                ));
            }
            eig.push(value.max(0.0));
        }
        let max_eig = eig.iter().copied().fold(0.0, f64::max);
        let zero_tol = max_eig.max(1.0) * (k as f64) * f64::EPSILON * 16.0;
        let build = |f: &dyn Fn(f64) -> f64| {
            let diag = DVector::from_iterator(k, eig.iter().map(|&e| f(e)));
            &eigenvectors * DMatrix::from_diagonal(&diag) * eigenvectors.transpose()
        };
        // Round-off eigenvalues near zero would otherwise leak ~1e-8 into Null(ℬ).
        let sqrt_disagreement = build(&|e| if e > zero_tol { e.sqrt() } else { 0.0 });
        let disagreement_pinv = build(&|e| if e > zero_tol { 1.0 / e } else { 0.0 });
        eig.sort_by(f64::total_cmp);

        let mixing_neighbors = (0..k)
            .map(|node| {
                (0..k)
                    .filter(|&s| a[(s, node)] != 0.0)
                    .map(|s| (s, a[(s, node)]))
                    .collect()
            })
            .collect();
        let graph_neighbors = (0..k)
            .map(|node| (0..k).filter(|&s| s != node && a[(s, node)] != 0.0).collect())
            .collect();
        Ok(Self {
            node_count: k,
            block_dim,
            combination: a,
            sqrt_disagreement,
            disagreement_pinv,
            mixing_neighbors,
            graph_neighbors,
            eigenvalues: eig,
            zero_tolerance: zero_tol,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn stacked_dim(&self) -> usize {
        self.node_count * self.block_dim
    }

    pub fn combination(&self) -> &DMatrix<f64> {
        &self.combination
    }

    /// Ascending eigenvalues of `I − A`.
    pub fn disagreement_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn graph_neighbors(&self, k: usize) -> &[usize] {
        &self.graph_neighbors[k]
    }

    fn kron(&self, small: &DMatrix<f64>) -> DMatrix<f64> {
        small.kronecker(&DMatrix::identity(self.block_dim, self.block_dim))
    }

    /// Dense `ℬ`.
    pub fn b_op(&self) -> DMatrix<f64> {
        self.kron(&self.sqrt_disagreement)
    }

    /// Dense `ℬ²`.
    pub fn b_sq(&self) -> DMatrix<f64> {
        let k = self.node_count;
        self.kron(&(DMatrix::identity(k, k) - &self.combination))
    }

    /// Dense `Ā`.
    pub fn a_bar(&self) -> DMatrix<f64> {
        let k = self.node_count;
        self.kron(&((DMatrix::identity(k, k) + &self.combination) * 0.5))
    }

    /// Dense `𝒜 = A ⊗ I_M`.
    pub fn a_op(&self) -> DMatrix<f64> {
        self.kron(&self.combination)
    }

    fn graph_laplacian(&self) -> DMatrix<f64> {
        let k = self.node_count;
        let mut l = DMatrix::zeros(k, k);
        for node in 0..k {
            for &s in &self.graph_neighbors[node] {
                l[(node, s)] = -1.0;
            }
            l[(node, node)] = self.graph_neighbors[node].len() as f64;
        }
        l
    }

    /// Dense `ℒ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.kron(&self.graph_laplacian())
    }

    /// Largest eigenvalue of `ℒ`.
    pub fn laplacian_max_eigenvalue(&self) -> f64 {
        self.graph_laplacian()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Singular values of `ℬ`: `sqrt(eig(I − A))`, each with multiplicity `M`.
    /// Eigenvalues at round-off level count as zero.
    pub fn spectral(&self) -> SpectralInfo {
        let m = self.block_dim;
        let singular_values: Vec<f64> = self
            .eigenvalues
            .iter()
            .rev()
            .flat_map(|&e| std::iter::repeat_n(e.sqrt(), m))
            .collect();
        let nonzero: Vec<f64> = self
            .eigenvalues
            .iter()
            .filter(|&&e| e > self.zero_tolerance)
            .map(|e| e.sqrt())
            .collect();
        SpectralInfo {
            sigma_max: singular_values[0],
            sigma_min: 0.0,
            sigma_min_nonzero: nonzero.first().copied().unwrap_or(0.0),
            rank: nonzero.len() * m,
            singular_values,
            rank_tolerance: self.zero_tolerance.sqrt(),
        }
    }

    fn check_len(&self, v: &DVector<f64>) {
        assert_eq!(v.len(), self.stacked_dim(), "stacked vector length mismatch");
    }

    /// Applies a K x K matrix blockwise.
    fn apply_small(&self, small: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.check_len(v);
        let (k, m) = (self.node_count, self.block_dim);
        // Column j of `blocks` is agent j's block.
        let blocks = DMatrix::from_column_slice(m, k, v.as_slice());
        let out = blocks * small.transpose();
        DVector::from_column_slice(out.as_slice())
    }

    /// `𝒜ᵀw`: agent `k` combines `Σ_s a_sk w_s` over its neighborhood.
    pub fn mix(&self, w: &DVector<f64>) -> DVector<f64> {
        self.check_len(w);
        let mut out = DVector::zeros(w.len());
        self.mix_into(w.as_slice(), out.as_mut_slice());
        out
    }

    pub(crate) fn mix_into(&self, w: &[f64], out: &mut [f64]) {
        let m = self.block_dim;
        for (neighbors, target) in self.mixing_neighbors.iter().zip(out.chunks_exact_mut(m)) {
            target.fill(0.0);
            for &(s, a) in neighbors {
                for (t, &x) in target.iter_mut().zip(&w[s * m..(s + 1) * m]) {
                    *t += a * x;
                }
            }
        }
    }

    /// `ℬ²w = w − 𝒜w`, local to each neighborhood.
    pub fn disagreement(&self, w: &DVector<f64>) -> DVector<f64> {
        w - self.mix(w)
    }

    /// `Āw = ½(w + 𝒜w)`.
    pub fn half_mix(&self, w: &DVector<f64>) -> DVector<f64> {
        (w + self.mix(w)) * 0.5
    }

    /// `ℒw`: agent `k` forms `Σ_{s∈N_k\{k}} (w_k − w_s)`.
    pub fn laplacian_apply(&self, w: &DVector<f64>) -> DVector<f64> {
        self.check_len(w);
        let m = self.block_dim;
        let mut out = DVector::zeros(w.len());
        for (k, neighbors) in self.graph_neighbors.iter().enumerate() {
            let mut target = out.rows_mut(k * m, m);
            for &s in neighbors {
                target += w.rows(k * m, m);
                target -= w.rows(s * m, m);
            }
        }
        out
    }

    /// `ℬv`. Needs the full matrix square root, so this is not agent-local;
    /// it is used for analysis only.
    pub fn b_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_small(&self.sqrt_disagreement, v)
    }

    /// `(ℬ²)⁺v`.
    pub fn b_sq_pinv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_small(&self.disagreement_pinv, v)
    }

    /// Network average `(1/K)Σ_k w_k`, length `M`.
    pub fn average(&self, w: &DVector<f64>) -> DVector<f64> {
        self.check_len(w);
        let m = self.block_dim;
        let mut avg = DVector::zeros(m);
        for k in 0..self.node_count {
            avg += w.rows(k * m, m);
        }
        avg / self.node_count as f64
    }

    /// `1_K ⊗ x`.
    pub fn replicate(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.block_dim);
        DVector::from_iterator(self.stacked_dim(), (0..self.node_count).flat_map(|_| x.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{metropolis_weights, Network};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_vec(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn two_node_square_root() {
        let a = DMatrix::from_element(2, 2, 0.5);
        let ops = ConsensusOperators::new(a, 1).unwrap();
        let b = ops.b_op();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((&b - &expected).amax() < 1e-14);
        assert!((&b * &b - ops.b_sq()).amax() < 1e-14);
    }

    #[test]
    fn rejects_non_psd() {
        // I − A has eigenvalue −1.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let err = ConsensusOperators::new(a, 1).unwrap_err();
        assert!(err.to_string().contains("I−A not PSD; invalid combination matrix"));
    }

    #[test]
    fn local_operators_match_dense() {
        let net = Network::ring(6).unwrap();
        let ops = build_consensus_operators(&metropolis_weights(&net).unwrap(), 3).unwrap();
        let w = random_vec(18, 1);
        assert!((ops.mix(&w) - ops.a_op() * &w).amax() < 1e-13);
        assert!((ops.disagreement(&w) - ops.b_sq() * &w).amax() < 1e-13);
        assert!((ops.half_mix(&w) - ops.a_bar() * &w).amax() < 1e-13);
        assert!((ops.laplacian_apply(&w) - ops.laplacian() * &w).amax() < 1e-13);
        // Ring: eigenvalues 2 − 2cos(2πj/6), largest 4.
        assert!((ops.laplacian_max_eigenvalue() - 4.0).abs() < 1e-12);
        assert!((ops.b_apply(&w) - ops.b_op() * &w).amax() < 1e-13);
        let b = ops.b_op();
        assert!((&b * &b - ops.b_sq()).amax() < 1e-12);
    }

    #[test]
    fn null_space_is_consensus() {
        let net = Network::path(4).unwrap();
        let ops = build_consensus_operators(&metropolis_weights(&net).unwrap(), 2).unwrap();
        let x = DVector::from_vec(vec![1.5, -2.0]);
        let w = ops.replicate(&x);
        assert!(ops.b_apply(&w).amax() < 1e-13);
        assert!(ops.laplacian_apply(&w).amax() < 1e-13);
        assert!((ops.average(&w) - x).amax() < 1e-15);
        let info = ops.spectral();
        assert_eq!(info.rank, 6);
        assert!((info.sigma_max_sq() - ops.disagreement_eigenvalues()[3]).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_on_range() {
        let net = Network::ring(5).unwrap();
        let ops = build_consensus_operators(&metropolis_weights(&net).unwrap(), 2).unwrap();
        let v = ops.disagreement(&random_vec(10, 3));
        let back = ops.disagreement(&ops.b_sq_pinv_apply(&v));
        assert!((back - &v).amax() < 1e-12);
    }
}
