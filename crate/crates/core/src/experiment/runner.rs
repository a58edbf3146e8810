use serde::{Deserialize, Serialize};

use super::{generate_scenario, GeneratedScenario, GridSpec, ScenarioSpec};
use crate::consensus::{
    distributed_constants, run_distributed, Algorithm, AlgorithmFamily, DistributedRunConfig, DistributedState,
    EarlyStop, RunOutcome, TraceSampling,
};
use crate::error::{Error, Result};
use crate::problem::SpectralInfo;
use crate::solvers::theoretical_rate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub algorithms: Vec<AlgorithmFamily>,
    /// Penalties tried for `AL_PD_DIST`; `PD_DIST` always uses `ρ = 0`.
    pub rho_sweep: Vec<f64>,
    pub grid: GridSpec,
    pub max_iterations: usize,
    pub target_error: f64,
    pub divergence_threshold: f64,
    pub sampling: TraceSampling,
    /// `None` runs every grid point to the target, divergence or the limit.
    pub early_stop: Option<EarlyStop>,
}

impl ExperimentConfig {
    /// All seven algorithm families, `ρ ∈ {1, 10, 100}`, 8 points per decade
    /// over 3 decades, target `1e−8` within `10⁵` iterations.
    pub fn new(scenario: ScenarioSpec) -> Self {
        Self {
            scenario,
            algorithms: AlgorithmFamily::ALL.to_vec(),
            rho_sweep: vec![1.0, 10.0, 100.0],
            grid: GridSpec::default(),
            max_iterations: 100_000,
            target_error: 1e-8,
            divergence_threshold: 1e8,
            sampling: TraceSampling::PerDecade(50),
            early_stop: Some(EarlyStop::default()),
        }
    }

    pub fn with_algorithms(mut self, algorithms: Vec<AlgorithmFamily>) -> Self {
        self.algorithms = algorithms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.grid.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithm list is empty".into()));
        }
        if self.algorithms.contains(&AlgorithmFamily::AlPdDist) {
            if self.rho_sweep.is_empty() {
                return Err(Error::Config("AL_PD_DIST needs a nonempty ρ sweep".into()));
            }
            if let Some(bad) = self.rho_sweep.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                return Err(Error::Config(format!("ρ sweep values must be positive, got {bad}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.target_error > 0.0) {
            return Err(Error::Config("target error must be positive".into()));
        }
        if !(self.divergence_threshold > 1.0) {
            return Err(Error::Config("divergence threshold must exceed 1".into()));
        }
        Ok(())
    }
}

/// One grid point of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: usize,
    pub group: String,
    pub family: AlgorithmFamily,
    pub algorithm: Algorithm,
    pub outcome: RunOutcome,
    pub iterations_to_target: Option<usize>,
    pub iterations_run: usize,
    /// Iteration budget of this run: the configured maximum, or fewer when
    /// a faster grid point of the same group was already found.
    pub iteration_limit: usize,
    pub final_rel_error: f64,
    /// Certified rate when the parameters are admissible for it.
    pub theoretical_gamma: Option<f64>,
    /// Relative to the output directory.
    pub trace_file: String,
    #[serde(skip)]
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroupStatus {
    Reached,
    /// No grid point reached the target and at least one diverged.
    Diverged,
    NotReached,
}

impl GroupStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Reached => "REACHED",
            Self::Diverged => "DIVERGED",
            Self::NotReached => "NOT_REACHED",
        }
    }
}

/// Grid-search outcome of one algorithm (one `ρ` for `AL_PD_DIST`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub family: AlgorithmFamily,
    pub rho: Option<f64>,
    pub status: GroupStatus,
    pub best_run: Option<usize>,
    pub best_algorithm: Option<Algorithm>,
    pub iterations_to_target: Option<usize>,
    pub best_final_rel_error: Option<f64>,
    pub grid_points: usize,
    pub reached: usize,
    pub diverged: usize,
    pub not_reached: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConstants {
    pub delta: f64,
    pub beta_bar: f64,
    pub min_agent_strong_convexity: f64,
    pub sigma_max_sq: f64,
    pub sigma_underbar_sq: f64,
    pub laplacian_max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub scenario: ScenarioSpec,
    pub cost_seed: u64,
    pub constants: ScenarioConstants,
    pub target_error: f64,
    pub max_iterations: usize,
    pub grid: GridSpec,
    pub rho_sweep: Vec<f64>,
    pub groups: Vec<GroupSummary>,
    /// Best group per algorithm family (best `ρ` for `AL_PD_DIST`).
    pub families: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn group(&self, name: &str) -> Option<&GroupSummary> {
        self.summary.groups.iter().find(|g| g.group == name)
    }

    pub fn family(&self, family: AlgorithmFamily) -> Option<&GroupSummary> {
        self.summary.families.iter().find(|g| g.family == family)
    }
}

/// Label of an algorithm group, e.g. `PD_DIST` or `AL_PD_DIST[rho=10]`.
pub fn group_label(family: AlgorithmFamily, rho: Option<f64>) -> String {
    match rho {
        Some(rho) => format!("{family}[rho={rho}]"),
        None => family.to_string(),
    }
}

struct Group {
    family: AlgorithmFamily,
    rho: Option<f64>,
    points: Vec<(Algorithm, Option<f64>)>,
}

fn gamma_for(g: &GeneratedScenario, spectral: &SpectralInfo, rho: f64, mu_w: f64, mu_lambda: f64) -> Option<f64> {
    let (constants, _) = distributed_constants(&g.problem, &g.ops, rho).ok()?;
    theoretical_rate(&constants, spectral, mu_w, mu_lambda)
        .ok()
        .map(|r| r.gamma)
}

fn build_groups(config: &ExperimentConfig, g: &GeneratedScenario, c: &ScenarioConstants) -> Vec<Group> {
    let spectral = g.ops.spectral();
    let grid = &config.grid;
    let primal_dual = |family, rho: f64| {
        let constants = distributed_constants(&g.problem, &g.ops, rho).ok();
        let delta_rho = c.delta + rho * c.sigma_max_sq;
        let mut points = Vec::new();
        for mu_w in grid.values(2.0 / delta_rho) {
            // μ_λ through the product t = μ_w μ_λ σ²_max ∈ (0, 1].
            for t in grid.values(1.0) {
                let mu_lambda = t / (mu_w * c.sigma_max_sq);
                let gamma = constants
                    .as_ref()
                    .and_then(|(k, _)| theoretical_rate(k, &spectral, mu_w, mu_lambda).ok())
                    .map(|r| r.gamma);
                points.push((Algorithm::PrimalDual { mu_w, mu_lambda, rho }, gamma));
            }
        }
        Group {
            family,
            rho: Some(rho).filter(|_| family == AlgorithmFamily::AlPdDist),
            points,
        }
    };
    let single = |family, make: fn(f64) -> Algorithm| Group {
        family,
        rho: None,
        points: grid
            .values(2.0 / c.delta)
            .into_iter()
            .map(|mu| {
                let alg = make(mu);
                // EXTRA is the primal-dual recursion with (μ, 1/(2μ), 1/(2μ)).
                let gamma = (family == AlgorithmFamily::Extra)
                    .then(|| gamma_for(g, &spectral, 0.5 / mu, mu, 0.5 / mu))
                    .flatten();
                (alg, gamma)
            })
            .collect(),
    };

    let mut groups = Vec::new();
    for &family in &config.algorithms {
        match family {
            AlgorithmFamily::PdDist => groups.push(primal_dual(family, 0.0)),
            AlgorithmFamily::AlPdDist => {
                for &rho in &config.rho_sweep {
                    groups.push(primal_dual(family, rho));
                }
            }
            AlgorithmFamily::Extra => groups.push(single(family, |mu| Algorithm::Extra { mu })),
            AlgorithmFamily::ExactDiffusion => groups.push(single(family, |mu| Algorithm::ExactDiffusion { mu })),
            AlgorithmFamily::Diffusion => groups.push(single(family, |mu| Algorithm::Diffusion { mu })),
            AlgorithmFamily::Diging => groups.push(single(family, |mu| Algorithm::Diging { mu })),
            AlgorithmFamily::Dlm => {
                let l = c.laplacian_max_eigenvalue;
                let mut points = Vec::new();
                for cc in grid.values(10.0 * c.delta / l) {
                    for mu_w in grid.values(2.0 / (c.delta + cc * l)) {
                        points.push((Algorithm::Dlm { c: cc, d: 1.0 / mu_w }, None));
                    }
                }
                groups.push(Group {
                    family,
                    rho: None,
                    points,
                });
            }
        }
    }
    groups
}

fn scenario_constants(g: &GeneratedScenario) -> ScenarioConstants {
    let spectral = g.ops.spectral();
    ScenarioConstants {
        delta: g.problem.smoothness(),
        beta_bar: g.problem.aggregate_strong_convexity(),
        min_agent_strong_convexity: g
            .problem
            .agent_strong_convexity()
            .into_iter()
            .fold(f64::INFINITY, f64::min),
        sigma_max_sq: spectral.sigma_max_sq(),
        sigma_underbar_sq: spectral.sigma_min_nonzero_sq(),
        laplacian_max_eigenvalue: g.ops.laplacian_max_eigenvalue(),
    }
}

/// Generates the scenario and runs [`run_experiment_on`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let generated = generate_scenario(&config.scenario)?;
    run_experiment_on(&generated, config)
}

/// Grid search over every configured algorithm on a generated scenario.
///
/// Grid points run sequentially, largest steps first. Once a point of a
/// group reaches the target in `n` iterations, later points of that group
/// get a budget of `n` iterations; ties go to the later, smaller step.
pub fn run_experiment_on(generated: &GeneratedScenario, config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if generated.spec != config.scenario {
        return Err(Error::Config(
            "generated scenario does not match the configured spec".into(),
        ));
    }
    let constants = scenario_constants(generated);
    let groups = build_groups(config, generated, &constants);
    let dim = generated.ops.stacked_dim();

    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for group in groups {
        let label = group_label(group.family, group.rho);
        let mut best: Option<(usize, usize)> = None;
        let (mut reached, mut diverged, mut not_reached) = (0, 0, 0);
        for (algorithm, theoretical_gamma) in &group.points {
            let limit = best.map_or(config.max_iterations, |(_, n)| n.min(config.max_iterations));
            let run_config = DistributedRunConfig {
                max_iterations: limit,
                target_error: config.target_error,
                divergence_threshold: config.divergence_threshold,
                sampling: config.sampling,
                early_stop: config.early_stop,
            };
            let run = run_distributed(
                &generated.problem,
                &generated.ops,
                *algorithm,
                &run_config,
                &generated.w_star,
                DistributedState::zeros(dim),
            )?;
            let id = runs.len();
            match run.outcome {
                RunOutcome::Reached { iterations } => {
                    reached += 1;
                    if best.is_none_or(|(_, n)| iterations <= n) {
                        best = Some((id, iterations));
                    }
                }
                RunOutcome::Diverged { .. } => diverged += 1,
                RunOutcome::NotReached => not_reached += 1,
            }
            runs.push(RunRecord {
                id,
                group: label.clone(),
                family: group.family,
                algorithm: *algorithm,
                outcome: run.outcome,
                iterations_to_target: run.outcome.iterations_to_target(),
                iterations_run: run.trace.last().map_or(0, |t| t.0),
                iteration_limit: limit,
                final_rel_error: run.final_rel_error,
                theoretical_gamma: *theoretical_gamma,
                trace_file: format!("traces/run_{id:05}.csv"),
                trace: run.trace,
            });
        }
        let status = if best.is_some() {
            GroupStatus::Reached
        } else if diverged > 0 {
            GroupStatus::Diverged
        } else {
            GroupStatus::NotReached
        };
        let best_record = best.map(|(id, _)| &runs[id]);
        summaries.push(GroupSummary {
            group: label,
            family: group.family,
            rho: group.rho,
            status,
            best_run: best_record.map(|r| r.id),
            best_algorithm: best_record.map(|r| r.algorithm),
            iterations_to_target: best_record.and_then(|r| r.iterations_to_target),
            best_final_rel_error: best_record.map(|r| r.final_rel_error),
            grid_points: group.points.len(),
            reached,
            diverged,
            not_reached,
        });
    }

    let families = family_bests(&summaries);
    Ok(ExperimentResult {
        summary: ExperimentSummary {
            scenario: config.scenario.clone(),
            cost_seed: generated.cost_seed,
            constants,
            target_error: config.target_error,
            max_iterations: config.max_iterations,
            grid: config.grid,
            rho_sweep: config.rho_sweep.clone(),
            groups: summaries,
            families,
        },
        runs,
    })
}

/// Best group per family: fewest iterations among reached groups, else the
/// first group of the family (any group diverging marks the family).
fn family_bests(groups: &[GroupSummary]) -> Vec<GroupSummary> {
    let mut out: Vec<GroupSummary> = Vec::new();
    for g in groups {
        match out.iter_mut().find(|o| o.family == g.family) {
            None => out.push(g.clone()),
            Some(current) => {
                let better = match (g.iterations_to_target, current.iterations_to_target) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => g.status == GroupStatus::Diverged && current.status != GroupStatus::Diverged,
                };
                if better {
                    *current = g.clone();
                }
            }
        }
    }
    out
}
