//! Scenario generation, step-size grid search and result emission.

mod emit;
mod grid;
mod runner;
mod scenario;

pub use emit::{emit_results, Manifest, LONG_CSV_FILE, LONG_CSV_HEADER, RUN_TRACE_HEADER, SUMMARY_FILE};
pub use grid::GridSpec;
pub use runner::{
    group_label, run_experiment, run_experiment_on, ExperimentConfig, ExperimentResult, ExperimentSummary, GroupStatus,
    GroupSummary, RunRecord, ScenarioConstants,
};
pub use scenario::{generate_scenario, GeneratedScenario, GraphModel, Scenario, ScenarioSpec};
