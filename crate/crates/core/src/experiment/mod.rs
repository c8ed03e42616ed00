//! Experiment orchestration: configuration, simulation runs, parameter
//! sweeps, the fixed-versus-adaptive comparison and result files.

mod compare;
mod config;
mod runner;
mod stats;
mod sweep;

pub use compare::{compare_fixed_vs_adaptive, constrained_minimum, CompareSpec, ComparisonReport, FamilyOptimum};
pub use config::{
    ArrivalChoice, ArrivalsSection, ExperimentConfig, MarkChoice, MarksSection, OutputSection,
    PenaltiesSection, PolicyChoice, SimulationSection, SolverSection,
};
pub use runner::{
    configured_policy, optimal_policy, read_path_records, read_summary, run_experiment,
    sample_ledgers, simulate, write_histogram, write_path_records, write_sample_path, RunOutput,
    MISSING, RESULTS_SCHEMA_VERSION,
};
pub use stats::{freedman_diaconis, risk_metric, Histogram, PathRecord, PerformanceStats, Summary};
pub use sweep::{sweep_from_config, sweep_parameters, Crossing, SweepAxis, SweepRow, SweepTable};
