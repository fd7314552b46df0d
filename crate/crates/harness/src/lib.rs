//! Verification harness for `ellipsym-core`: registered Monte Carlo and
//! oracle checks, experiment plans and CSV reports.

pub mod checks;
pub mod config;
pub mod csvio;
pub mod error;
pub mod ks;
pub mod plan;

pub use checks::{CheckConfig, CheckKind, CheckReport};
pub use config::{EstimatorSpec, SpecConfig};
pub use error::{HarnessError, Result};
pub use plan::{builtin_plan, builtin_plans, run_plan, ExperimentPlan, PlanOutcome};
