//! Multi-agent consensus optimization over a static undirected network.

mod algorithms;
mod mixing;
mod multi_agent;
mod network;
mod operators;
mod rates;
mod run;

pub use algorithms::{
    distributed_pd_step, variant_step, Algorithm, AlgorithmFamily, DistributedState, Variant, VariantParams,
};
pub use mixing::{metropolis_weights, CombinationMatrix, MixingReport};
pub use multi_agent::MultiAgentProblem;
pub use network::Network;
pub use operators::{build_consensus_operators, ConsensusOperators};
pub use rates::{
    distributed_constants, distributed_rate_report, nu_rho_bound, nu_rho_estimate, DistributedRateReport, NuRhoEstimate,
};
pub use run::{run_distributed, DistributedRun, DistributedRunConfig, EarlyStop, RunOutcome, TraceSampling};
