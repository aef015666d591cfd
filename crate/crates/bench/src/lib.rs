//! Reproducible experiment driver for the AFDM off-grid SBL estimator:
//! scenario files and presets, seeded Monte Carlo sweeps, RMSE scoring and
//! CSV/JSON output.

pub mod error;
pub mod metrics;
pub mod output;
pub mod runner;
pub mod scenario;

pub use error::{BenchError, Result};
pub use metrics::{min_cost_assignment, pair, rmse, rmse_range, rmse_velocity, RmseKind};
pub use output::{emit_results, summary, Format};
pub use runner::{run_scenario, run_trial, Report, ResultRow, RunOptions, ScatterRow, TraceRow};
pub use scenario::{Method, PhysicalTarget, Scenario, SblSpec, SystemSpec, TargetSpec};
