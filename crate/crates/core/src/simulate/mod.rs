//! Simulation scenarios, the replication harness and the robustness sweep.

mod experiment;
mod scenario;
mod sweep;

pub use experiment::{
    run_experiment, write_experiment_tables, CellMetrics, ExperimentReport, TargetEstimate, REPLICATION_SEED_DOMAIN,
    SCENARIO_STREAM_DOMAIN,
};
pub use scenario::{generate_scenario, Scenario, ScenarioSpec, TrueParams, Truth, REG_NAMES, REG_POINTS};
pub use sweep::{robustness_sweep, write_sweep_csv, ParameterDistance, RobustnessSweepSpec, SweepPoint, SweepReport};
