use nalgebra::{Cholesky, DMatrix, DVector};

use super::{ConsensusOperators, Network};
use crate::error::{Error, Result};
use crate::problem::{EqualityConstrainedProblem, QuadraticCost};

/// `K` agents with private quadratic costs `J_k(w) = wᵀR_k w + r_kᵀw`
/// seeking a common minimizer of `Σ_k J_k`.
///
/// The stacked form is `minimize 𝒥(w) = Σ_k J_k(w_k)` subject to `ℬw = 0`.
#[derive(Debug, Clone)]
pub struct MultiAgentProblem {
    network: Network,
    agent_costs: Vec<QuadraticCost>,
    stacked: EqualityConstrainedProblem<QuadraticCost>,
}

impl MultiAgentProblem {
    pub fn new(network: Network, agent_costs: Vec<QuadraticCost>, ops: &ConsensusOperators) -> Result<Self> {
        let k = network.node_count();
        if agent_costs.len() != k || ops.node_count() != k {
            return Err(Error::Dimension(format!(
                "{} costs and {}-node operators for a {k}-node network",
                agent_costs.len(),
                ops.node_count()
            )));
        }
        let m = ops.block_dim();
        if let Some(bad) = agent_costs.iter().position(|c| c.quadratic_term().nrows() != m) {
            return Err(Error::Dimension(format!("agent {bad} cost is not of dimension {m}")));
        }
        let km = k * m;
        let mut quadratic = DMatrix::zeros(km, km);
        let mut linear = DVector::zeros(km);
        for (idx, cost) in agent_costs.iter().enumerate() {
            quadratic
                .view_mut((idx * m, idx * m), (m, m))
                .copy_from(cost.quadratic_term());
            linear.rows_mut(idx * m, m).copy_from(cost.linear_term());
        }
        let stacked =
            EqualityConstrainedProblem::new(QuadraticCost::new(quadratic, linear)?, ops.b_op(), DVector::zeros(km))?;
        Ok(Self {
            network,
            agent_costs,
            stacked,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn agent_costs(&self) -> &[QuadraticCost] {
        &self.agent_costs
    }

    pub fn node_count(&self) -> usize {
        self.agent_costs.len()
    }

    pub fn block_dim(&self) -> usize {
        self.agent_costs[0].quadratic_term().nrows()
    }

    /// The equivalent single constrained problem with `B = ℬ`, `b = 0`.
    pub fn stacked_problem(&self) -> &EqualityConstrainedProblem<QuadraticCost> {
        &self.stacked
    }

    /// `∇𝒥(w) = col{2R_k w_k + r_k}`, evaluated agent by agent.
    pub fn stacked_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        assert_eq!(
            w.len(),
            self.block_dim() * self.node_count(),
            "stacked vector length mismatch"
        );
        let mut g = DVector::zeros(w.len());
        self.gradient_into(w.as_slice(), g.as_mut_slice());
        g
    }

    /// Slice kernel behind [`Self::stacked_gradient`]; `R_k` is column-major.
    pub(crate) fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        let m = self.block_dim();
        for ((cost, wk), gk) in self
            .agent_costs
            .iter()
            .zip(w.chunks_exact(m))
            .zip(out.chunks_exact_mut(m))
        {
            gk.copy_from_slice(cost.linear_term().as_slice());
            let columns = cost.quadratic_term().as_slice();
            // Two columns per pass halves the loads and stores of `gk`.
            let mut j = 0;
            while j + 1 < m {
                let (a, b) = (2.0 * wk[j], 2.0 * wk[j + 1]);
                let (c0, c1) = (&columns[j * m..(j + 1) * m], &columns[(j + 1) * m..(j + 2) * m]);
                for ((g, &x), &y) in gk.iter_mut().zip(c0).zip(c1) {
                    *g += a * x + b * y;
                }
                j += 2;
            }
            if j < m {
                let a = 2.0 * wk[j];
                for (g, &x) in gk.iter_mut().zip(&columns[j * m..]) {
                    *g += a * x;
                }
            }
        }
    }

    pub fn stacked_value(&self, w: &DVector<f64>) -> f64 {
        let m = self.block_dim();
        self.agent_costs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let wk = w.rows(k * m, m);
                (wk.transpose() * c.quadratic_term() * wk)[(0, 0)] + c.linear_term().dot(&wk)
            })
            .sum()
    }

    /// `Σ_k 2R_k`.
    pub fn aggregate_hessian(&self) -> DMatrix<f64> {
        let m = self.block_dim();
        self.agent_costs
            .iter()
            .fold(DMatrix::zeros(m, m), |acc, c| acc + c.quadratic_term() * 2.0)
    }

    /// Minimizer of `Σ_k J_k`, which requires `Σ_k R_k ≻ 0`.
    pub fn consensus_minimizer(&self) -> Result<DVector<f64>> {
        let m = self.block_dim();
        let rhs = -self
            .agent_costs
            .iter()
            .fold(DVector::zeros(m), |acc, c| acc + c.linear_term());
        let chol = Cholesky::new(self.aggregate_hessian())
            .ok_or_else(|| Error::StrongConvexityRequired("aggregate Hessian Σ2R_k is not positive definite".into()))?;
        let mut x = chol.solve(&rhs);
        // One step of iterative refinement.
        let residual = &rhs - self.aggregate_hessian() * &x;
        x += chol.solve(&residual);
        Ok(x)
    }

    /// `w★ = 1_K ⊗ w°`.
    pub fn consensus_optimum(&self) -> Result<DVector<f64>> {
        let x = self.consensus_minimizer()?;
        let k = self.node_count();
        Ok(DVector::from_iterator(
            x.len() * k,
            (0..k).flat_map(|_| x.iter().copied()),
        ))
    }

    /// `δ = max_k max|eig(2R_k)|`.
    pub fn smoothness(&self) -> f64 {
        self.agent_costs
            .iter()
            .flat_map(|c| c.hessian_eigenvalues())
            .fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// `β_k = λ_min(2R_k)` for each agent.
    pub fn agent_strong_convexity(&self) -> Vec<f64> {
        self.agent_costs.iter().map(QuadraticCost::min_curvature).collect()
    }

    /// `β̄ = λ_min((1/K) Σ_k 2R_k)`.
    pub fn aggregate_strong_convexity(&self) -> f64 {
        let h = self.aggregate_hessian() / self.node_count() as f64;
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}
