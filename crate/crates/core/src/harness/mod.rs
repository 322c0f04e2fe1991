//! End-to-end orchestration: run configuration, the full pipeline with its
//! on-disk artifacts, ablations, the oracle audit and benchmark tables.

mod ablation;
mod audit;
mod bench;
mod config;
mod pipeline;

pub use ablation::{compare_ablations, AblationRow, AblationTable, Variant, K_SWEEP_PERCENT};
pub use audit::{audit_csv, bfs_ball, oracle_audit, AuditConfig, AuditMode, AuditRow, AuditSummary};
pub use bench::{efficiency_csv, quality_bench, quality_csv, QualityRow};
pub use config::{CriterionKind, RunConfig};
pub use pipeline::{
    benchmark_graph, fit, prepare_graph, read_scores, run_pipeline, selection_csv, Fit, GraphSource, Metrics,
    PipelineRun, CHECKPOINT_FILE, CONFIG_ECHO_FILE, METRICS_FILE, SCORES_FILE, SELECTION_FILE, TRAIN_LOG_FILE,
};
pub use pipeline::write_file;
