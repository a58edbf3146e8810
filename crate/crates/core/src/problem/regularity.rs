use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{spectral_quantities, CostFunction, EqualityConstrainedProblem, QuadraticCost, SaddleReference};
use crate::error::{Error, Result};

/// Smoothness and strong-convexity constants of `J_ρ = J + ρ/2‖Bw - b‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub delta: f64,
    pub nu: f64,
    pub rho: f64,
    /// `δ + ρ σ_max²(B)`
    pub delta_rho: f64,
    pub nu_rho: f64,
}

impl RegularityConstants {
    pub fn new(delta: f64, nu: f64, rho: f64, sigma_max: f64, nu_rho: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidConstants(format!("δ must be positive, got {delta}")));
        }
        if !(nu >= 0.0) {
            return Err(Error::InvalidConstants(format!("ν must be nonnegative, got {nu}")));
        }
        if !(rho >= 0.0) {
            return Err(Error::InvalidConstants(format!("ρ must be nonnegative, got {rho}")));
        }
        let delta_rho = delta + rho * sigma_max * sigma_max;
        if !(nu_rho > 0.0 && nu_rho <= delta_rho) {
            return Err(Error::InvalidConstants(format!(
                "need 0 < ν_ρ ≤ δ_ρ, got ν_ρ = {nu_rho}, δ_ρ = {delta_rho}"
            )));
        }
        Ok(Self {
            delta,
            nu,
            rho,
            delta_rho,
            nu_rho,
        })
    }

    /// Exact constants of a quadratic problem: `δ = λ_max(2R)`,
    /// `ν = max(λ_min(2R), 0)` and `ν_ρ = λ_min(2R + ρBᵀB)`.
    pub fn for_quadratic(problem: &EqualityConstrainedProblem<QuadraticCost>, rho: f64) -> Result<Self> {
        let cost = problem.cost();
        let delta = cost.smoothness();
        let nu = cost.min_curvature().max(0.0);
        let b = problem.constraint_matrix();
        let spectral = spectral_quantities(b)?;
        let penalized = cost.quadratic_term() * 2.0 + b.transpose() * b * rho;
        let nu_rho = penalized
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(nu_rho > 0.0) {
            return Err(Error::StrongConvexityRequired(format!(
                "λ_min(2R + ρBᵀB) = {nu_rho:e} at ρ = {rho}"
            )));
        }
        Self::new(delta, nu, rho, spectral.sigma_max, nu_rho)
    }

    /// `δ_ρ / ν_ρ`
    pub fn condition_number(&self) -> f64 {
        self.delta_rho / self.nu_rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCheck {
    /// Radius multiplier used to draw the sample around `w★`.
    pub scale: f64,
    /// `(x - w★)ᵀ(∇J_ρ(x) - ∇J_ρ(w★)) - ν_ρ‖x - w★‖²`
    pub strong_convexity_margin: f64,
    pub strong_convexity_ok: bool,
    /// `δ_ρ‖x - y‖ - ‖∇J_ρ(x) - ∇J_ρ(y)‖`
    pub smoothness_margin: f64,
    pub smoothness_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    pub delta: f64,
    pub nu: f64,
    pub delta_ok: bool,
    pub nu_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub samples: Vec<SampleCheck>,
    pub hessian: Option<HessianCheck>,
}

impl RegularityReport {
    pub fn all_passed(&self) -> bool {
        self.samples.iter().all(|s| s.strong_convexity_ok && s.smoothness_ok)
            && self.hessian.as_ref().is_none_or(|h| h.delta_ok && h.nu_ok)
    }

    pub fn failures(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| !(s.strong_convexity_ok && s.smoothness_ok))
            .count()
    }
}

const SAMPLE_SCALES: [f64; 3] = [1.0, 10.0, 0.1];

/// Sample-tests the strong-convexity-at-`w★` and smoothness inequalities for
/// the claimed constants. This can refute a claim but not certify one for a
/// general oracle; quadratic costs additionally get an exact eigenvalue check.
pub fn verify_regularity<C: CostFunction>(
    problem: &EqualityConstrainedProblem<C>,
    reference: &SaddleReference,
    rho: f64,
    claimed: &RegularityConstants,
    sample_count: usize,
    seed: u64,
) -> Result<RegularityReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    let m = problem.dim_primal();
    if reference.dim_primal() != m {
        return Err(Error::Dimension("reference does not match problem".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |scale: f64| -> DVector<f64> {
        DVector::from_fn(m, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
    };
    let w_star = &reference.w_star;
    let grad_star = problem.penalized_gradient(w_star, rho);

    let samples = (0..sample_count)
        .map(|i| {
            let scale = SAMPLE_SCALES[i % SAMPLE_SCALES.len()];
            let x = w_star + normal(scale);
            let diff = &x - w_star;
            let grad_x = problem.penalized_gradient(&x, rho);
            let inner = diff.dot(&(&grad_x - &grad_star));
            let dist_sq = diff.norm_squared();
            let sc_margin = inner - claimed.nu_rho * dist_sq;
            let sc_ok = sc_margin >= -1e-12 * (1.0 + inner.abs());

            let y = w_star + normal(scale);
            let grad_y = problem.penalized_gradient(&y, rho);
            let lhs = (&grad_x - &grad_y).norm();
            let rhs = claimed.delta_rho * (&x - &y).norm();
            let sm_margin = rhs - lhs;
            let sm_ok = sm_margin >= -1e-12 * (1.0 + lhs);
            SampleCheck {
                scale,
                strong_convexity_margin: sc_margin,
                strong_convexity_ok: sc_ok,
                smoothness_margin: sm_margin,
                smoothness_ok: sm_ok,
            }
        })
        .collect();

    let hessian = problem.cost().hessian().map(|h| {
        let eig = h.symmetric_eigenvalues();
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let nu = min.max(0.0);
        let tol = 1e-10 * (1.0 + max.abs());
        HessianCheck {
            delta: max,
            nu,
            delta_ok: claimed.delta >= max - tol,
            nu_ok: claimed.nu <= nu + tol,
        }
    });
    Ok(RegularityReport { samples, hessian })
}
