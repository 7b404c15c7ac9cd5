//! Experiment configuration, seeded Monte-Carlo sweeps and CSV output.
//!
//! Trial `t` of every grid point draws its delays, pilots, data, channel and
//! unit noise from the same seed, derived from the master seed and `t`, so
//! points differ only by SNR and pilot energy and reruns are bit-identical
//! regardless of the number of worker threads.

mod config;
mod report;
mod run;

pub use config::{
    DetectorConfig, EstimatorKind, ExperimentConfig, FrameConfig, SolverConfig, SystemConfig, DEFAULT_LAMBDA,
};
pub use report::{experiment_csv, point, summarize, PointSummary};
pub use run::{run_ber_experiment, run_mae_experiment, trial_seed, TrialResult};
