use serde::{Deserialize, Serialize};

use super::{ConsensusOperators, MultiAgentProblem};
use crate::error::{Error, Result};
use crate::problem::RegularityConstants;
use crate::solvers::{theoretical_rate, RateReport};

/// Golden-section interval tolerance, relative to the search interval.
const ETA_TOL: f64 = 1e-10;

/// Strong-convexity estimate of the penalized stacked cost when only the
/// aggregate cost is strongly convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuRhoEstimate {
    pub nu_rho: f64,
    pub eta_star: f64,
    /// `ν_ρ` increases to this value (`β̄`) as `ρ → ∞`.
    pub limit: f64,
}

impl NuRhoEstimate {
    /// `β̄ − ν_ρ`.
    pub fn limit_gap(&self) -> f64 {
        self.limit - self.nu_rho
    }
}

/// `min{β̄ − 2δη, ρσ̲²η²/(4(η² + 1))}`
pub fn nu_rho_bound(beta_bar: f64, delta: f64, sigma_underbar_sq: f64, rho: f64, eta: f64) -> f64 {
    let eta_sq = eta * eta;
    (beta_bar - 2.0 * delta * eta).min(rho * sigma_underbar_sq * eta_sq / (4.0 * (eta_sq + 1.0)))
}

/// Maximizes [`nu_rho_bound`] over `η ∈ (0, β̄/(2δ))` by golden-section
/// search. The first branch decreases and the second increases in `η`, so
/// the bound is unimodal.
pub fn nu_rho_estimate(beta_bar: f64, delta: f64, sigma_underbar_sq: f64, rho: f64) -> Result<NuRhoEstimate> {
    for (name, v) in [("β̄", beta_bar), ("δ", delta), ("σ̲²", sigma_underbar_sq), ("ρ", rho)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let f = |eta: f64| nu_rho_bound(beta_bar, delta, sigma_underbar_sq, rho, eta);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, beta_bar / (2.0 * delta));
    let tol = ETA_TOL * hi;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let eta_star = 0.5 * (lo + hi);
    Ok(NuRhoEstimate {
        nu_rho: f(eta_star),
        eta_star,
        limit: beta_bar,
    })
}

/// Rate certificates for the distributed primal-dual recursion on a
/// multi-agent problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributedRateReport {
    pub rho: f64,
    /// `max_k max|eig(2R_k)|`
    pub delta: f64,
    /// `min_k β_k`; only meaningful when positive.
    pub min_agent_strong_convexity: f64,
    pub beta_bar: f64,
    pub sigma_max_sq: f64,
    pub sigma_underbar_sq: f64,
    /// Constants used for the certificate at the requested `ρ`.
    pub constants: RegularityConstants,
    /// Present when `ρ > 0`.
    pub nu_rho_estimate: Option<NuRhoEstimate>,
    pub rate: RateReport,
    /// `δ/ν_0`, present when every agent cost is strongly convex.
    pub kappa_l: Option<f64>,
    /// `δ_ρ/ν_ρ`, present when `ρ > 0`.
    pub kappa_al: Option<f64>,
}

/// Regularity constants of the stacked penalized cost at `ρ`.
///
/// With `ρ = 0` every agent cost must be strongly convex and `ν_0 = min_k β_k`.
/// With `ρ > 0` only the aggregate cost must be, and `ν_ρ` comes from
/// [`nu_rho_estimate`].
pub fn distributed_constants(
    problem: &MultiAgentProblem,
    ops: &ConsensusOperators,
    rho: f64,
) -> Result<(RegularityConstants, Option<NuRhoEstimate>)> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("ρ must be nonnegative, got {rho}")));
    }
    let delta = problem.smoothness();
    let betas = problem.agent_strong_convexity();
    let nu_0 = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let spectral = ops.spectral();
    if rho == 0.0 {
        if !(nu_0 > 0.0) {
            let (agent, beta) = betas
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least two agents");
            return Err(Error::StrongConvexityRequired(format!(
                "ρ = 0 needs every agent cost strongly convex; agent {agent} has β_k = {beta:e}"
            )));
        }
        return Ok((
            RegularityConstants::new(delta, nu_0, 0.0, spectral.sigma_max, nu_0)?,
            None,
        ));
    }
    let beta_bar = problem.aggregate_strong_convexity();
    if !(beta_bar > 0.0) {
        return Err(Error::StrongConvexityRequired(format!(
            "ρ > 0 needs the aggregate cost strongly convex; β̄ = {beta_bar:e}"
        )));
    }
    let est = nu_rho_estimate(beta_bar, delta, spectral.sigma_min_nonzero_sq(), rho)?;
    let constants = RegularityConstants::new(delta, nu_0.max(0.0), rho, spectral.sigma_max, est.nu_rho)?;
    Ok((constants, Some(est)))
}

/// Certified linear rate of the distributed recursion at `(μ_w, μ_λ, ρ)`,
/// using [`distributed_constants`].
pub fn distributed_rate_report(
    problem: &MultiAgentProblem,
    ops: &ConsensusOperators,
    rho: f64,
    mu_w: f64,
    mu_lambda: f64,
) -> Result<DistributedRateReport> {
    let (constants, estimate) = distributed_constants(problem, ops, rho)?;
    let spectral = ops.spectral();
    let nu_0 = problem
        .agent_strong_convexity()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let rate = theoretical_rate(&constants, &spectral, mu_w, mu_lambda)?;
    Ok(DistributedRateReport {
        rho,
        delta: constants.delta,
        min_agent_strong_convexity: nu_0,
        beta_bar: problem.aggregate_strong_convexity(),
        sigma_max_sq: spectral.sigma_max_sq(),
        sigma_underbar_sq: spectral.sigma_min_nonzero_sq(),
        constants,
        nu_rho_estimate: estimate,
        rate,
        kappa_l: (nu_0 > 0.0).then(|| constants.delta / nu_0),
        kappa_al: estimate.map(|e| constants.delta_rho / e.nu_rho),
    })
}
