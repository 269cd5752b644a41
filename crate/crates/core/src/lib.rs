//! Stationary analysis, simulation and capacity planning for a queue served
//! by `n0` always-on servers plus `k` on-demand instances that need a setup
//! time before serving, with finite capacity and impatient waiting jobs.
//!
//! * [`solver`] computes the exact stationary distribution in time linear in
//!   the number of states.
//! * [`metrics`] turns a distribution into mean occupancy, waiting time,
//!   instance cost, blocking and dropping probabilities.
//! * [`oracle`] is an independent dense solve used for validation.
//! * [`sim`] is a discrete-event simulator of the threshold policy.
//! * [`planner`] sweeps parameter grids and picks the number of instances.

pub mod error;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod planner;
pub mod report;
pub mod sim;
pub mod solver;
pub mod state_space;

pub use error::{Error, Result};
pub use metrics::{compute_metrics, performance_score, MetricsReport, Weights};
pub use params::ModelParams;
pub use planner::{plan_k, sweep, PlanResult, SweepDim, SweepParam, SweepRow, SweepSpec};
pub use sim::{compare, simulate, ComparisonRow, SimConfig, SimReport};
pub use solver::{solve_stationary, StationaryDistribution};
pub use state_space::StateSpace;

/// Solves `m` and computes its metrics in one step.
pub fn analyze(m: &ModelParams) -> Result<MetricsReport> {
    let dist = solve_stationary(m)?;
    compute_metrics(&dist, m)
}
