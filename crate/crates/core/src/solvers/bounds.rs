use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{RegularityConstants, SpectralInfo};

/// Relative slack allowed on the inclusive dual bound.
const INCLUSIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundsRegime {
    Incremental,
    /// Non-incremental recursion with `η = 0`.
    NonincrementalEta0,
}

/// Constants of the shifted cost `J − (μ_λ/2)‖Bw − b‖²` that the `η = 0`
/// non-incremental recursion effectively minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedConstants {
    /// `δ − μ_λ σ_min²(B)`
    pub delta_prime: f64,
    /// `ν − μ_λ σ_max²(B)`
    pub nu_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizeBounds {
    /// Strict: admissible `μ_w < mu_w_bound`.
    pub mu_w_bound: f64,
    /// Inclusive: admissible `μ_λ ≤ mu_lambda_bound`.
    pub mu_lambda_bound: f64,
    pub regime: BoundsRegime,
    /// Reported for [`BoundsRegime::NonincrementalEta0`], evaluated at
    /// `mu_lambda_bound`.
    pub shifted: Option<ShiftedConstants>,
}

impl StepSizeBounds {
    pub fn admits(&self, mu_w: f64, mu_lambda: f64) -> bool {
        mu_w > 0.0
            && mu_lambda > 0.0
            && mu_w < self.mu_w_bound
            && mu_lambda <= self.mu_lambda_bound * (1.0 + INCLUSIVE_SLACK)
    }
}

/// Contraction certificate for the Lyapunov functional
/// `V = c_w‖w̃‖² + c_λ‖λ̃‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub gamma: f64,
    /// `1 − μ_w ν_ρ (1 − μ_w δ_ρ)`
    pub gamma_primal: f64,
    /// `1 − μ_w μ_λ σ̲²(B)`
    pub gamma_dual: f64,
    /// `1 − μ_w μ_λ σ_max²(B)`
    pub c_w: f64,
    /// `μ_w / μ_λ`
    pub c_lambda: f64,
    /// `δ_ρ / ν_ρ`
    pub kappa: f64,
}

/// Admissible step sizes for linear convergence.
///
/// The incremental regime needs `μ_w < 1/δ_ρ` and `μ_λ ≤ ν_ρ/σ_max²`. For
/// the `η = 0` non-incremental regime the dual bound is `ν/(2σ_max²)` and the
/// primal bound `1/(δ − μ_λσ_min²)` is evaluated at that dual bound.
pub fn step_size_bounds(
    constants: &RegularityConstants,
    spectral: &SpectralInfo,
    regime: BoundsRegime,
) -> Result<StepSizeBounds> {
    let sigma_max_sq = spectral.sigma_max_sq();
    match regime {
        BoundsRegime::Incremental => {
            if !(constants.nu_rho > 0.0) {
                return Err(Error::StrongConvexityRequired(format!("ν_ρ = {}", constants.nu_rho)));
            }
            Ok(StepSizeBounds {
                mu_w_bound: 1.0 / constants.delta_rho,
                mu_lambda_bound: constants.nu_rho / sigma_max_sq,
                regime,
                shifted: None,
            })
        }
        BoundsRegime::NonincrementalEta0 => {
            if !(constants.nu > 0.0) {
                return Err(Error::StrongConvexityRequired(format!("ν = {}", constants.nu)));
            }
            let mu_lambda_bound = constants.nu / (2.0 * sigma_max_sq);
            let shifted = shifted_constants(constants, spectral, mu_lambda_bound)?;
            Ok(StepSizeBounds {
                mu_w_bound: 1.0 / shifted.delta_prime,
                mu_lambda_bound,
                regime,
                shifted: Some(shifted),
            })
        }
    }
}

/// Shifted constants `(δ′, ν′)` at a given dual step. Fails when `ν′ ≤ 0`.
pub fn shifted_constants(
    constants: &RegularityConstants,
    spectral: &SpectralInfo,
    mu_lambda: f64,
) -> Result<ShiftedConstants> {
    let delta_prime = constants.delta - mu_lambda * spectral.sigma_min_sq();
    let nu_prime = constants.nu - mu_lambda * spectral.sigma_max_sq();
    if !(nu_prime > 0.0) {
        return Err(Error::StrongConvexityRequired(format!(
            "shifted cost has ν′ = {nu_prime:e}; need μ_λ < ν/σ_max²"
        )));
    }
    Ok(ShiftedConstants { delta_prime, nu_prime })
}

impl ShiftedConstants {
    /// The shifted cost viewed as an unpenalized problem.
    pub fn as_regularity(&self) -> Result<RegularityConstants> {
        RegularityConstants::new(self.delta_prime, self.nu_prime, 0.0, 0.0, self.nu_prime)
    }
}

/// `μ_w = 0.5/δ_ρ`, `μ_λ = ν_ρ/σ_max²`.
pub fn auto_step_sizes(constants: &RegularityConstants, spectral: &SpectralInfo) -> (f64, f64) {
    (0.5 / constants.delta_rho, constants.nu_rho / spectral.sigma_max_sq())
}

/// Linear-rate certificate `γ = max(γ_primal, γ_dual)` for admissible steps.
pub fn theoretical_rate(
    constants: &RegularityConstants,
    spectral: &SpectralInfo,
    mu_w: f64,
    mu_lambda: f64,
) -> Result<RateReport> {
    if !(mu_w > 0.0 && mu_lambda > 0.0) {
        return Err(Error::InadmissibleStepSizes("step sizes must be positive".into()));
    }
    let sigma_max_sq = spectral.sigma_max_sq();
    let mu_w_bound = 1.0 / constants.delta_rho;
    let mu_lambda_bound = constants.nu_rho / sigma_max_sq;
    if mu_lambda > mu_lambda_bound * (1.0 + INCLUSIVE_SLACK) {
        return Err(Error::InadmissibleStepSizes(format!(
            "μ_λ exceeds ν_ρ/σ²_max ({mu_lambda} > {mu_lambda_bound})"
        )));
    }
    if mu_w >= mu_w_bound {
        return Err(Error::InadmissibleStepSizes(format!(
            "μ_w must be below 1/δ_ρ ({mu_w} ≥ {mu_w_bound})"
        )));
    }
    let gamma_primal = 1.0 - mu_w * constants.nu_rho * (1.0 - mu_w * constants.delta_rho);
    let gamma_dual = 1.0 - mu_w * mu_lambda * spectral.sigma_min_nonzero_sq();
    Ok(RateReport {
        gamma: gamma_primal.max(gamma_dual),
        gamma_primal,
        gamma_dual,
        c_w: 1.0 - mu_w * mu_lambda * sigma_max_sq,
        c_lambda: mu_w / mu_lambda,
        kappa: constants.condition_number(),
    })
}
