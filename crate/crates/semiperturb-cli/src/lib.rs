//! Configuration-driven experiment runner for `semiperturb`.

// negated comparisons reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use report::{compare_reports, ReportDiff, RunReport, Trajectory};
pub use run::{run, RunOutput};
