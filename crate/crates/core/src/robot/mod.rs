//! Differential-drive robot benchmark for flexible sampling.

pub mod experiment;
pub mod model;
pub mod report;

pub use experiment::{
    make_strategy_inputs, rollout, run_experiment, sample_centers, sample_neighbors, surrogate_step, CenterRecord,
    EcdfRow, ExperimentConfig, ExperimentReport, Rollout, Strategy, SurrogateRun, ROBOT_M,
};
pub use model::{robot_step, wrap_angle, Lemniscate, RobotParams};
