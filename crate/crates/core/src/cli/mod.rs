//! Experiment orchestration: configuration, the end-to-end run, report
//! emission and the `eegaudio` command line.

pub mod commands;
mod config;
mod pipeline;
mod report;

pub use config::{ClassifierConfig, CorrelationConfig, ExperimentConfig};
pub use pipeline::{
    evaluate_space, execute, fit_cca, fit_dcca, paired_split, pca_svm_predict, prepare_corpus, run_pipeline,
    softmax_predict, PairedSplit, SUMMARY_FILE, TRAINING_LOG_FILE,
};
pub use report::{make_report, Method, MethodReport, ReportBundle, RunMetadata, Scenario, ScenarioResult};
