//! Experiment harness: configuration files, batch and online pipelines,
//! latency measurement, and result records with raw CSV emission.
//!
//! Everything is driven by one [`ExperimentConfig`] and its single master
//! seed; runs with the same config are bit-identical apart from the timing
//! fields. Result writes all happen after computation on the calling
//! thread, so output files are never interleaved.

pub mod batch;
pub mod config;
pub mod online;
pub mod record;
pub mod timing;

pub use batch::{
    collect_training_data, evaluate_policy, run_batch, write_batch_outputs,
    write_collected_samples, BatchRun, VariantPolicies,
};
pub use config::{
    DataConfig, EnvOverrides, EvaluationConfig, ExperimentConfig, ForestConfig, FpfConfig,
    Mode, MreConfig, ProblemId, QConfig, Variant,
};
pub use online::{run_online, write_online_outputs, OnlineExperiment, TrialPolicies};
pub use record::{
    fnv1a64, hash_hex, EpisodeRow, ResultRecord, SummaryStats, TimingBlock, TrialCurve,
    VariantResult,
};
pub use timing::time_actions;
