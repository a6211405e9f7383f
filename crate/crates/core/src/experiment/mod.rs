//! Experiment layer: JSON-configured, seed-reproducible replicated runs
//! with CSV/JSON outputs.

pub mod config;
pub mod csvio;
pub mod run;
pub mod summary;

pub use config::{
    AlgorithmConfig, BuiltExperiment, CenterSpec, DataMode, ExperimentConfig, GridConfig,
    KernelKind, LevelConfig, ModelConfig, ModelId, PriorConfig, StartLaw,
};
pub use run::{run_diagnose, run_estimate, run_generate, DiagnoseSummary, ExperimentReport, ReplicateReport};
pub use summary::{
    summarize_reports, write_summary_csv, write_summary_text, QuartileSummary, SummaryRow,
};
