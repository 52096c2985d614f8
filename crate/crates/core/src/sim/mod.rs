//! Trace-driven slot simulator: per slot, read features and bandwidth,
//! optionally adjust the budget elastically, allocate, and score the choice
//! against ground-truth accuracy.

pub mod compare;
pub mod config;
pub mod run;
pub mod scenario;
pub mod trace;

use thiserror::Error;

pub use compare::{compare_schedulers, write_comparison_csv, write_slot_records_csv, Comparison, ComparisonRow};
pub use config::{ExperimentConfig, Scheduler, SimConfig, UtilityMode, WeightPreset, WeightSpec, WEIGHT_SET_2};
pub use run::{run_simulation, BorrowStats, ChosenConfig, SimReport, SlotRecord, UtilitySource};
pub use scenario::{
    generate_scenario, generate_synthetic_scenario, read_scenario_dir, write_scenario_dir, FeatureStream, Scenario,
    ScenarioSpec, SlotFeatures,
};
pub use trace::{generate_trace, read_trace_csv, write_trace_csv, BandwidthTrace, TraceProfile};

use crate::allocation::AllocError;
use crate::elastic::ElasticError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("horizon {needed} exceeds available data (trace {trace} slots, streams {streams} slots)")]
    HorizonMismatch { needed: usize, trace: usize, streams: usize },
    #[error("no trained utility model for camera {0}")]
    UntrainedModel(String),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Elastic(#[from] ElasticError),
}
