use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{ConsensusOperators, MultiAgentProblem};
use crate::error::{Error, Result};
use crate::solvers::SolverState;

/// Iterate of a distributed recursion. Both vectors are stacked over agents
/// (length `KM`). For every algorithm except DIGing the dual is `𝓎 = ℬλ`;
/// DIGing carries `λ` itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedState {
    pub primal: DVector<f64>,
    pub dual: DVector<f64>,
    pub iteration: usize,
}

impl DistributedState {
    pub fn new(primal: DVector<f64>, dual: DVector<f64>) -> Self {
        Self {
            primal,
            dual,
            iteration: 0,
        }
    }

    pub fn zeros(stacked_dim: usize) -> Self {
        Self::new(DVector::zeros(stacked_dim), DVector::zeros(stacked_dim))
    }

    pub fn is_finite(&self) -> bool {
        self.primal
            .as_slice()
            .iter()
            .chain(self.dual.as_slice())
            .all(|v| v.is_finite())
    }

    fn diverged(&self) -> Error {
        Error::Diverged {
            last_finite: Box::new(SolverState {
                w: self.primal.clone(),
                lambda: self.dual.clone(),
                iteration: self.iteration,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Extra,
    ExactDiffusion,
    Diffusion,
    Diging,
    Dlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VariantParams {
    Step { mu: f64 },
    Dlm { c: f64, d: f64 },
}

/// A distributed algorithm together with its scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    /// Distributed primal-dual; `rho = 0` is the Lagrangian method and
    /// `rho > 0` the augmented Lagrangian one.
    PrimalDual {
        mu_w: f64,
        mu_lambda: f64,
        rho: f64,
    },
    Extra {
        mu: f64,
    },
    ExactDiffusion {
        mu: f64,
    },
    Diffusion {
        mu: f64,
    },
    Diging {
        mu: f64,
    },
    Dlm {
        c: f64,
        d: f64,
    },
}

impl Algorithm {
    /// Short label: `PD_DIST`, `AL_PD_DIST`, `EXTRA`, ...
    pub fn family(&self) -> AlgorithmFamily {
        match *self {
            Self::PrimalDual { rho, .. } if rho == 0.0 => AlgorithmFamily::PdDist,
            Self::PrimalDual { .. } => AlgorithmFamily::AlPdDist,
            Self::Extra { .. } => AlgorithmFamily::Extra,
            Self::ExactDiffusion { .. } => AlgorithmFamily::ExactDiffusion,
            Self::Diffusion { .. } => AlgorithmFamily::Diffusion,
            Self::Diging { .. } => AlgorithmFamily::Diging,
            Self::Dlm { .. } => AlgorithmFamily::Dlm,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::PrimalDual { mu_w, mu_lambda, rho } => {
                mu_w > 0.0
                    && mu_lambda > 0.0
                    && rho >= 0.0
                    && rho.is_finite()
                    && mu_w.is_finite()
                    && mu_lambda.is_finite()
            }
            Self::Extra { mu } | Self::ExactDiffusion { mu } | Self::Diffusion { mu } | Self::Diging { mu } => {
                mu > 0.0 && mu.is_finite()
            }
            Self::Dlm { c, d } => c > 0.0 && d > 0.0 && c.is_finite() && d.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid parameters {self:?}")))
        }
    }

    /// One synchronous round.
    pub fn step(
        &self,
        problem: &MultiAgentProblem,
        ops: &ConsensusOperators,
        state: &DistributedState,
    ) -> Result<DistributedState> {
        match *self {
            Self::PrimalDual { mu_w, mu_lambda, rho } => distributed_pd_step(problem, ops, mu_w, mu_lambda, rho, state),
            Self::Extra { mu } => variant_step(Variant::Extra, problem, ops, VariantParams::Step { mu }, state),
            Self::ExactDiffusion { mu } => {
                variant_step(Variant::ExactDiffusion, problem, ops, VariantParams::Step { mu }, state)
            }
            Self::Diffusion { mu } => variant_step(Variant::Diffusion, problem, ops, VariantParams::Step { mu }, state),
            Self::Diging { mu } => variant_step(Variant::Diging, problem, ops, VariantParams::Step { mu }, state),
            Self::Dlm { c, d } => variant_step(Variant::Dlm, problem, ops, VariantParams::Dlm { c, d }, state),
        }
    }

    /// Dual value at which `(w★, ·)` is a fixed point of [`Algorithm::step`].
    /// Diffusion has no dual and its fixed point is biased, so this returns
    /// zeros for it.
    pub fn optimal_dual(
        &self,
        problem: &MultiAgentProblem,
        ops: &ConsensusOperators,
        w_star: &DVector<f64>,
    ) -> DVector<f64> {
        let g = problem.stacked_gradient(w_star);
        match self {
            Self::PrimalDual { .. } | Self::Extra { .. } | Self::Dlm { .. } => -g,
            Self::ExactDiffusion { .. } => -ops.half_mix(&g),
            Self::Diffusion { .. } => DVector::zeros(g.len()),
            Self::Diging { .. } => -ops.b_sq_pinv_apply(&g),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = self.family();
        match *self {
            Self::PrimalDual { mu_w, mu_lambda, rho } => {
                write!(f, "{family}(mu_w={mu_w:e},mu_lambda={mu_lambda:e},rho={rho})")
            }
            Self::Extra { mu } | Self::ExactDiffusion { mu } | Self::Diffusion { mu } | Self::Diging { mu } => {
                write!(f, "{family}(mu={mu:e})")
            }
            Self::Dlm { c, d } => write!(f, "{family}(c={c:e},d={d:e})"),
        }
    }
}

/// Algorithm label without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgorithmFamily {
    PdDist,
    AlPdDist,
    Extra,
    ExactDiffusion,
    Diffusion,
    Diging,
    Dlm,
}

impl AlgorithmFamily {
    pub const ALL: [Self; 7] = [
        Self::PdDist,
        Self::AlPdDist,
        Self::Extra,
        Self::ExactDiffusion,
        Self::Diffusion,
        Self::Diging,
        Self::Dlm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PdDist => "PD_DIST",
            Self::AlPdDist => "AL_PD_DIST",
            Self::Extra => "EXTRA",
            Self::ExactDiffusion => "EXACT_DIFFUSION",
            Self::Diffusion => "DIFFUSION",
            Self::Diging => "DIGING",
            Self::Dlm => "DLM",
        }
    }
}

impl fmt::Display for AlgorithmFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == upper)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

fn check_dims(problem: &MultiAgentProblem, ops: &ConsensusOperators, state: &DistributedState) -> Result<()> {
    let n = ops.stacked_dim();
    if problem.node_count() * problem.block_dim() != n || state.primal.len() != n || state.dual.len() != n {
        return Err(Error::Dimension(format!(
            "state of lengths ({}, {}) for stacked dimension {n}",
            state.primal.len(),
            state.dual.len()
        )));
    }
    Ok(())
}

fn finish(prev: &DistributedState, primal: DVector<f64>, dual: DVector<f64>) -> Result<DistributedState> {
    let next = DistributedState {
        primal,
        dual,
        iteration: prev.iteration + 1,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(prev.diverged())
    }
}

/// `𝓌_i = 𝓌 − μ_w(∇𝒥(𝓌) + ρℬ²𝓌 + 𝓎)`, `𝓎_i = 𝓎 + μ_λℬ²𝓌_i`.
///
/// Each agent only needs `Σ_s a_sk w_s` from its neighborhood.
pub fn distributed_pd_step(
    problem: &MultiAgentProblem,
    ops: &ConsensusOperators,
    mu_w: f64,
    mu_lambda: f64,
    rho: f64,
    state: &DistributedState,
) -> Result<DistributedState> {
    Algorithm::PrimalDual { mu_w, mu_lambda, rho }.validate()?;
    check_dims(problem, ops, state)?;
    let (w, y) = (state.primal.as_slice(), state.dual.as_slice());
    let mut primal = DVector::zeros(w.len());
    let mut scratch = DVector::zeros(w.len());
    problem.gradient_into(w, primal.as_mut_slice());
    let p = primal.as_mut_slice();
    if rho != 0.0 {
        ops.mix_into(w, scratch.as_mut_slice());
        for (((p, &s), &wi), &yi) in p.iter_mut().zip(scratch.as_slice()).zip(w).zip(y) {
            *p = wi - mu_w * (*p + rho * (wi - s) + yi);
        }
    } else {
        for ((p, &wi), &yi) in p.iter_mut().zip(w).zip(y) {
            *p = wi - mu_w * (*p + yi);
        }
    }
    // The scratch buffer becomes the new dual.
    ops.mix_into(p, scratch.as_mut_slice());
    for ((d, &p), &yi) in scratch.as_mut_slice().iter_mut().zip(primal.as_slice()).zip(y) {
        *d = yi + mu_lambda * (p - *d);
    }
    finish(state, primal, scratch)
}

/// One round of EXTRA, exact diffusion, diffusion, DIGing or DLM.
pub fn variant_step(
    variant: Variant,
    problem: &MultiAgentProblem,
    ops: &ConsensusOperators,
    params: VariantParams,
    state: &DistributedState,
) -> Result<DistributedState> {
    check_dims(problem, ops, state)?;
    let w = &state.primal;
    let y = &state.dual;
    let algorithm = match (variant, params) {
        (Variant::Extra, VariantParams::Step { mu }) => Algorithm::Extra { mu },
        (Variant::ExactDiffusion, VariantParams::Step { mu }) => Algorithm::ExactDiffusion { mu },
        (Variant::Diffusion, VariantParams::Step { mu }) => Algorithm::Diffusion { mu },
        (Variant::Diging, VariantParams::Step { mu }) => Algorithm::Diging { mu },
        (Variant::Dlm, VariantParams::Dlm { c, d }) => Algorithm::Dlm { c, d },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "parameters {params:?} do not fit {variant:?}"
            )))
        }
    };
    algorithm.validate()?;
    let grad = problem.stacked_gradient(w);
    let (primal, dual) = match algorithm {
        Algorithm::Extra { mu } => {
            // 𝓌_i = Ā𝓌 − μ∇𝒥(𝓌) − μ𝓎
            let primal = ops.half_mix(w) - (grad + y) * mu;
            let dual = y + ops.disagreement(&primal) / (2.0 * mu);
            (primal, dual)
        }
        Algorithm::ExactDiffusion { mu } => {
            let psi = w - grad * mu;
            let primal = ops.half_mix(&psi) - y * mu;
            let dual = y + ops.disagreement(&primal) / (2.0 * mu);
            (primal, dual)
        }
        Algorithm::Diffusion { mu } => {
            let z = w - grad * mu;
            (ops.mix(&z), y.clone())
        }
        Algorithm::Diging { mu } => {
            // 𝓌_i = 𝒜²𝓌 − μ∇𝒥(𝓌) − μℬ²λ, λ_i = λ + (1/μ)ℬ²𝓌_i
            let primal = ops.mix(&ops.mix(w)) - (grad + ops.disagreement(y)) * mu;
            let dual = y + ops.disagreement(&primal) / mu;
            (primal, dual)
        }
        Algorithm::Dlm { c, d } => {
            // The ℒ term uses the previous iterate so each agent stays local.
            let direction = grad + ops.laplacian_apply(w) * c + y;
            let primal = w - direction / d;
            let dual = y + ops.laplacian_apply(&primal) * c;
            (primal, dual)
        }
        Algorithm::PrimalDual { .. } => unreachable!("not a variant"),
    };
    finish(state, primal, dual)
}
