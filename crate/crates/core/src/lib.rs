//! Cooperative deterministic learning for fleets of differential-drive vehicles.
//!
//! Each vehicle measures only its pose. A high-gain observer estimates the
//! body velocities, a backstepping controller tracks a recurrent reference,
//! and a Gaussian RBF network learns the unknown Coriolis and friction terms.
//! Neighbouring vehicles couple their network weights through a graph
//! Laplacian so that the whole fleet converges to one shared model. The
//! time-averaged weights can then be reused as fixed "experience" on a
//! different reference.
//!
//! ```no_run
//! use cdl_fleet::config::{FleetConfig, RunMode};
//! use cdl_fleet::engine::{metrics, run_learning};
//!
//! let cfg = FleetConfig::default();
//! let scenario = cfg.scenario(RunMode::Learning)?;
//! let log = run_learning(&scenario)?;
//! println!("consensus diameter {:.4}", metrics::metric_consensus(&log));
//! # Ok::<(), cdl_fleet::Error>(())
//! ```

pub mod checks;
pub mod commands;
pub mod config;
pub mod control;
pub mod engine;
pub mod error;
pub mod export;
pub mod graph;
pub mod model;
pub mod observer;
pub mod rbf;

pub use config::FleetConfig;
pub use error::{Error, Result};
