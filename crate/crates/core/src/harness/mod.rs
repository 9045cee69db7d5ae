//! End-to-end experiments: Phase-1 collection, training, paired evaluation
//! of every initializer on held-out instances, and report files.

mod config;
mod report;
mod run;

pub use config::{default_methods, method_name, ExperimentConfig, FamilyConfig, GdSettings, LearnerSettings};
pub use report::{
    build_table, constraint_violation_fraction, emit_reports, load_config_or_manifest, violation_fraction,
    ComparisonTable, CurvePoint, HistogramBin, Manifest, MethodReport, PairedComparison,
};
pub use run::{
    collect, evaluate, run_experiment, test_instance, train_models, InstanceRecord, LearnerSummary, Phase1Data,
    RunArtifacts, Timing, TrainingSummary, MAML_FILE,
};
pub use crate::diagnostics::paired_ci;
