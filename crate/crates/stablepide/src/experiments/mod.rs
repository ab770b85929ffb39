//! Experiment harness: configuration ingestion, rate sweeps for the
//! scheme and the generalized central limit theorem, regularity and
//! consistency audits, constants reports, CSV/JSON emission.

mod config;
mod phi;
mod report;
mod runners;

pub use config::{ExperimentConfig, OutputFormat};
pub use phi::PhiName;
pub use report::{AuditRow, ConstantsRow, ExperimentReport, RateRow, SolutionRow};
pub use runners::{
    report_constants, run_clt_experiment, run_consistency_audit, run_rate_experiment,
    run_regularity_audit, run_solve,
};
