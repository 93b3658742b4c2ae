//! Reference generators, integrator, fleet orchestration, logging and metrics.

pub mod integrator;
pub mod log;
pub mod metrics;
pub mod reference;
pub mod sim;

pub use integrator::{rk4_step, Rk4};
pub use log::{FleetSnapshot, Record, RunLog};
pub use metrics::{
    consensus_diameter, estimation_error_along, fleet_lyapunov, metric_consensus,
    metric_estimation_error, metric_pe, metric_tracking, observer_error_max, EstimationStats,
    MetricsSummary, TrackingStats,
};
pub use reference::{reference_eval, Phase as EllipsePhase, Reference, ReferenceSpec};
pub use sim::{run_experience, run_learning, FleetDynamics, Phase, Scenario, SimSettings};
