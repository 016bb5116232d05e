//! Config-driven experiment runner: one entry point per study, JSON reports
//! and CSV artifacts.

mod config;
mod oracle;
mod report;
mod runs;
mod sweep;

pub use config::{
    BackendKind, CircuitConfig, DataConfig, ExperimentConfig, ExperimentKind, LogisticConfig, MnistConfig,
    ProblemSource, SweepConfig, SyntheticConfig,
};
pub use oracle::{oracle_check, random_problem, OracleCheck};
pub use report::{ExperimentReport, GroupSummary, Metrics, RepeatRecord, REPORT_SCHEMA_VERSION};
pub use runs::{derive_seed, resolve_output_dir, run, OUTPUT_DIR_ENV};
pub use sweep::{resolve_parameter, spearman, sweep, SweepOutcome, SweepRow};
