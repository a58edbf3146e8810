use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{
    build_consensus_operators, metropolis_weights, CombinationMatrix, ConsensusOperators, MultiAgentProblem, Network,
};
use crate::error::{Error, Result};
use crate::problem::QuadraticCost;

/// Attempts at drawing a connected random graph.
const GRAPH_ATTEMPTS: usize = 1000;
/// Attempts at drawing nonconvex costs with a positive-definite aggregate.
const COST_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    /// Diagonal `R_k` with integer entries in `{6, 7, 8}`.
    WellConditioned,
    /// Diagonal `R_k` with one entry in `[2, 8]` and the rest in `(0, 1)`.
    IllConditioned,
    /// As ill-conditioned, with one negative entry per agent (`k ≥ 1`).
    NonconvexLocal,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::WellConditioned => "well",
            Self::IllConditioned => "ill",
            Self::NonconvexLocal => "nonconvex",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "well" | "well_conditioned" => Ok(Self::WellConditioned),
            "ill" | "ill_conditioned" => Ok(Self::IllConditioned),
            "nonconvex" | "nonconvex_local" => Ok(Self::NonconvexLocal),
            _ => Err(Error::Parse(format!(
                "unknown scenario {s:?} (expected well, ill or nonconvex)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GraphModel {
    ErdosRenyi { p: f64 },
    FromFile { path: PathBuf },
}

impl Default for GraphModel {
    fn default() -> Self {
        Self::ErdosRenyi { p: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    #[serde(rename = "K")]
    pub node_count: usize,
    #[serde(rename = "M")]
    pub block_dim: usize,
    pub seed: u64,
    pub graph_model: GraphModel,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, node_count: usize, block_dim: usize, seed: u64) -> Self {
        Self {
            scenario,
            node_count,
            block_dim,
            seed,
            graph_model: GraphModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Config(format!("K must be at least 2, got {}", self.node_count)));
        }
        if self.block_dim < 1 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if let GraphModel::ErdosRenyi { p } = self.graph_model {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("edge probability must lie in (0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// A generated instance with everything the runners need.
#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub spec: ScenarioSpec,
    /// Seed the costs were finally drawn with; differs from `spec.seed` only
    /// when a nonconvex draw had to be repeated.
    pub cost_seed: u64,
    pub combination: CombinationMatrix,
    pub ops: ConsensusOperators,
    pub problem: MultiAgentProblem,
    /// Stacked consensus optimum `1_K ⊗ w°`.
    pub w_star: DVector<f64>,
}

fn draw_costs(spec: &ScenarioSpec, seed: u64) -> Result<Vec<QuadraticCost>> {
    let (k_count, m) = (spec.node_count, spec.block_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut diagonals: Vec<Vec<f64>> = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let diag = match spec.scenario {
            Scenario::WellConditioned => (0..m).map(|_| rng.random_range(6..=8) as f64).collect(),
            Scenario::IllConditioned | Scenario::NonconvexLocal => {
                let mut d: Vec<f64> = (0..m).map(|_| open_unit(&mut rng)).collect();
                d[k % m] = rng.random_range(2.0..=8.0);
                d
            }
        };
        diagonals.push(diag);
    }
    if spec.scenario == Scenario::NonconvexLocal {
        for k in 1..k_count {
            let j = (k - 1) % m;
            diagonals[k][j] = -diagonals[k - 1][j] / 2.0;
        }
    }
    diagonals
        .into_iter()
        .map(|diag| {
            let linear = DVector::from_iterator(m, (0..m).map(|_| rng.random_range(0.0..=2.0)));
            QuadraticCost::diagonal(&diag, linear)
        })
        .collect()
}

/// Uniform on the open interval `(0, 1)`.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

fn build_network(spec: &ScenarioSpec) -> Result<Network> {
    let net = match &spec.graph_model {
        GraphModel::ErdosRenyi { p } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            Network::connected_erdos_renyi(spec.node_count, *p, &mut rng, GRAPH_ATTEMPTS)?
        }
        GraphModel::FromFile { path } => Network::read(path)?,
    };
    if net.node_count() != spec.node_count {
        return Err(Error::Config(format!(
            "graph has {} nodes but K = {}",
            net.node_count(),
            spec.node_count
        )));
    }
    if !net.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(net)
}

/// Builds the network, combination matrix, agent costs and reference
/// optimum of a scenario. Deterministic for a fixed spec.
///
/// For the nonconvex scenario the costs are redrawn with seeds `seed + 1`,
/// `seed + 2`, ... until the aggregate Hessian is positive definite.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<GeneratedScenario> {
    spec.validate()?;
    let network = build_network(spec)?;
    let combination = metropolis_weights(&network)?;
    let ops = build_consensus_operators(&combination, spec.block_dim)?;

    let mut last_beta = f64::NAN;
    for attempt in 0..COST_ATTEMPTS {
        let cost_seed = spec.seed.wrapping_add(attempt);
        let costs = draw_costs(spec, cost_seed)?;
        let problem = MultiAgentProblem::new(network.clone(), costs, &ops)?;
        last_beta = problem.aggregate_strong_convexity();
        if last_beta > 0.0 {
            let w_star = problem.consensus_optimum()?;
            return Ok(GeneratedScenario {
                spec: spec.clone(),
                cost_seed,
                combination,
                ops,
                problem,
                w_star,
            });
        }
    }
    Err(Error::StrongConvexityRequired(format!(
        "aggregate Hessian not positive definite after {COST_ATTEMPTS} draws (last λ_min = {last_beta:e}, K = {}, M = {})",
        spec.node_count, spec.block_dim
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(p: &MultiAgentProblem, k: usize) -> Vec<f64> {
        p.agent_costs()[k].quadratic_term().diagonal().iter().copied().collect()
    }

    #[test]
    fn well_conditioned_entries() {
        let g = generate_scenario(&ScenarioSpec::new(Scenario::WellConditioned, 6, 4, 11)).unwrap();
        for k in 0..6 {
            let d = diag(&g.problem, k);
            assert!(d.iter().all(|&v| v == 6.0 || v == 7.0 || v == 8.0));
            let r = &g.problem.agent_costs()[k];
            assert!(r.hessian_eigenvalues().last().unwrap() / r.hessian_eigenvalues()[0] <= 8.0 / 6.0);
            assert!(r.linear_term().iter().all(|&v| (0.0..=2.0).contains(&v)));
        }
    }

    #[test]
    fn ill_conditioned_entries() {
        let g = generate_scenario(&ScenarioSpec::new(Scenario::IllConditioned, 5, 3, 2)).unwrap();
        for k in 0..5 {
            let d = diag(&g.problem, k);
            for (j, &v) in d.iter().enumerate() {
                if j == k % 3 {
                    assert!((2.0..=8.0).contains(&v));
                } else {
                    assert!(v > 0.0 && v < 1.0);
                }
            }
        }
    }

    #[test]
    fn nonconvex_pair() {
        let g = generate_scenario(&ScenarioSpec::new(Scenario::NonconvexLocal, 2, 3, 5)).unwrap();
        let (d0, d1) = (diag(&g.problem, 0), diag(&g.problem, 1));
        assert_eq!(d1[0], -d0[0] / 2.0);
        assert!(g.problem.aggregate_strong_convexity() > 0.0);
        assert!(g.problem.agent_strong_convexity()[1] < 0.0);
    }

    #[test]
    fn deterministic() {
        let spec = ScenarioSpec::new(Scenario::NonconvexLocal, 8, 4, 77);
        let a = generate_scenario(&spec).unwrap();
        let b = generate_scenario(&spec).unwrap();
        assert_eq!(a.problem.agent_costs(), b.problem.agent_costs());
        assert_eq!(a.problem.network(), b.problem.network());
        assert_eq!(a.w_star, b.w_star);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_scenario(&ScenarioSpec::new(Scenario::WellConditioned, 1, 4, 0)).is_err());
        let mut spec = ScenarioSpec::new(Scenario::WellConditioned, 4, 2, 0);
        spec.graph_model = GraphModel::ErdosRenyi { p: 0.0 };
        assert!(matches!(generate_scenario(&spec), Err(Error::Config(_))));
        assert_eq!("ILL".parse::<Scenario>().unwrap(), Scenario::IllConditioned);
    }
}
