//! Monte Carlo coverage experiments.
//!
//! Every random stream is derived from one master seed with [`derive_seed`],
//! and each trial owns its generator, so results do not depend on the
//! number of worker threads.

mod config;
mod run;
mod stats;

pub use config::{
    ExperimentConfig, GateNoiseConfig, Method, NoiseConfig, QuantumConfig, RawConfig, RawTrain,
    Task, DEFAULT_ALPHA, DEFAULT_DRIFT_TAU, DEFAULT_GRID_STEP, DEFAULT_SHOTS, DEFAULT_TRIALS,
};
pub use run::{
    prepare, run_experiment, run_trial, run_trials, summarize, CoverageReport, ExperimentOutput,
    Calibration, MethodReport, Prediction, Predictor, Prepared, SweepPoint, TrialRecord, CSV_HEADER,
};
pub use stats::{
    coverage_probability_bound, empirical_coverage_stats, generalization_bound,
    generalization_curve, reference_coverage, BoundPoint, CoverageStats, REPORT_BAND,
};

pub const STREAM_DATA: u64 = 1;
pub const STREAM_INIT: u64 = 2;
pub const STREAM_TRAIN: u64 = 3;
pub const STREAM_ENSEMBLE: u64 = 4;
pub const STREAM_TRIALS: u64 = 5;
pub const STREAM_CALIBRATE: u64 = 6;
pub const STREAM_PREDICT: u64 = 7;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Generator seeded with `seed`.
pub fn seeded_rng(seed: u64) -> crate::Rng {
    <crate::Rng as rand::SeedableRng>::seed_from_u64(seed)
}

/// Seed of trial `index`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    derive_seed(derive_seed(master, STREAM_TRIALS), index as u64)
}
