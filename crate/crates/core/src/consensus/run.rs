use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Algorithm, ConsensusOperators, DistributedState, MultiAgentProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributedRunConfig {
    pub max_iterations: usize,
    /// Stop once `‖𝓌_i − 𝓌★‖²/‖𝓌★‖²` drops to this value.
    pub target_error: f64,
    /// Divergence is declared when `‖𝓌‖` or `‖𝓎‖` exceeds this multiple of
    /// `max(1, ‖𝓌★‖)`.
    pub divergence_threshold: f64,
    pub sampling: TraceSampling,
    /// Give up on runs that cannot reach the target in time, see
    /// [`EarlyStop`].
    pub early_stop: Option<EarlyStop>,
}

/// Abandons hopeless runs. At iterations `first_check·2^j` the error is
/// compared with the previous checkpoint; the run stops as not reached when
/// the error did not decrease, or when the observed linear rate projects
/// more than `slack · max_iterations` total iterations to the target.
/// Every `first_check` iterations the run also stops once its error exceeds
/// `growth` times the smallest error seen at those checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub first_check: usize,
    pub slack: f64,
    pub growth: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            first_check: 1000,
            slack: 3.0,
            growth: 100.0,
        }
    }
}

impl EarlyStop {
    fn hopeless(&self, iteration: usize, err: f64, previous: f64, span: usize, target: f64, limit: usize) -> bool {
        if !(err < previous) {
            return true;
        }
        let log_rate = (err / previous).ln() / span as f64;
        let remaining = (target / err).ln() / log_rate;
        iteration as f64 + remaining > self.slack * limit as f64
    }
}

/// Which iterations are kept in a run's trace. The first and last iterates
/// are always kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TraceSampling {
    Every(usize),
    /// Roughly `n` evenly spaced samples per decade of iterations; all of the
    /// first `n` iterations are kept.
    PerDecade(usize),
}

impl TraceSampling {
    pub fn keeps(&self, iteration: usize) -> bool {
        match *self {
            Self::Every(n) => iteration % n.max(1) == 0,
            Self::PerDecade(n) => {
                let n = n.max(1);
                if iteration < n {
                    return true;
                }
                // Largest power of ten not exceeding the iteration.
                let mut decade = 1;
                while decade <= iteration / 10 {
                    decade *= 10;
                }
                let stride = (decade * 10 / n).max(1);
                iteration % stride == 0
            }
        }
    }
}

impl Default for DistributedRunConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            target_error: 1e-8,
            divergence_threshold: 1e8,
            sampling: TraceSampling::Every(1),
            early_stop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunOutcome {
    Reached { iterations: usize },
    NotReached,
    Diverged { iteration: usize },
}

impl RunOutcome {
    pub fn iterations_to_target(&self) -> Option<usize> {
        match *self {
            Self::Reached { iterations } => Some(iterations),
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Self::Diverged { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Reached { .. } => "REACHED",
            Self::NotReached => "NOT_REACHED",
            Self::Diverged { .. } => "DIVERGED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedRun {
    pub algorithm: Algorithm,
    pub outcome: RunOutcome,
    /// Relative error of the last finite iterate.
    pub final_rel_error: f64,
    /// `(iteration, relative error)` samples; iteration 0 is the start.
    pub trace: Vec<(usize, f64)>,
}

/// Runs `algorithm` from `initial` until the target relative error, the
/// iteration limit or divergence.
pub fn run_distributed(
    problem: &MultiAgentProblem,
    ops: &ConsensusOperators,
    algorithm: Algorithm,
    config: &DistributedRunConfig,
    w_star: &DVector<f64>,
    initial: DistributedState,
) -> Result<DistributedRun> {
    if w_star.len() != ops.stacked_dim() {
        return Err(Error::Dimension(
            "reference does not match the stacked dimension".into(),
        ));
    }
    let norm_sq = w_star.norm_squared();
    let rel = |w: &DVector<f64>| {
        let e = (w - w_star).norm_squared();
        if norm_sq > 0.0 {
            e / norm_sq
        } else {
            e
        }
    };
    let limit = config.divergence_threshold * w_star.norm().max(1.0);

    let mut state = initial;
    let mut err = rel(&state.primal);
    let mut trace = vec![(state.iteration, err)];
    let mut outcome = RunOutcome::NotReached;
    let mut checkpoint = config.early_stop.map(|e| (e.first_check.max(2), err, 0usize));
    let mut lowest_checked = err;
    if err <= config.target_error {
        outcome = RunOutcome::Reached { iterations: 0 };
    }
    while outcome == RunOutcome::NotReached && state.iteration < config.max_iterations {
        let next = match algorithm.step(problem, ops, &state) {
            Ok(next) => next,
            Err(Error::Diverged { .. }) => {
                outcome = RunOutcome::Diverged {
                    iteration: state.iteration + 1,
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let next_err = rel(&next.primal);
        if !next_err.is_finite() || next.primal.norm() > limit || next.dual.norm() > limit {
            outcome = RunOutcome::Diverged {
                iteration: next.iteration,
            };
            break;
        }
        state = next;
        err = next_err;
        if err <= config.target_error {
            outcome = RunOutcome::Reached {
                iterations: state.iteration,
            };
        }
        if config.sampling.keeps(state.iteration) || outcome != RunOutcome::NotReached {
            trace.push((state.iteration, err));
        }
        if let (Some(stop), Some((at, previous, since))) = (config.early_stop, checkpoint) {
            let every = stop.first_check.max(2);
            if outcome == RunOutcome::NotReached && state.iteration % every == 0 {
                if err > stop.growth * lowest_checked {
                    break;
                }
                lowest_checked = lowest_checked.min(err);
            }
            if outcome == RunOutcome::NotReached && state.iteration == at {
                let span = at - since;
                if stop.hopeless(at, err, previous, span, config.target_error, config.max_iterations) {
                    break;
                }
                checkpoint = Some((at * 2, err, at));
            }
        }
    }
    if trace.last().map(|t| t.0) != Some(state.iteration) {
        trace.push((state.iteration, err));
    }
    Ok(DistributedRun {
        algorithm,
        outcome,
        final_rel_error: err,
        trace,
    })
}
