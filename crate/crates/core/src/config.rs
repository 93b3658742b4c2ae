//! Scenario configuration file (TOML).
//!
//! ```toml
//! [vehicle]
//! mass = 2.0
//! inertia = 0.2
//! half_track = 0.15
//! wheel_radius = 0.05
//!
//! [observer]
//! l1 = 1.0
//! l2 = 1.0
//! delta = 0.01
//!
//! [gains]
//! kx = 1.0
//! # ...
//!
//! [rbf]
//! box_min = [0.0, 0.0]
//! box_max = [4.0, 4.0]
//! nodes_per_dim = [5, 5]
//! width = 0.7
//!
//! [graph]
//! preset = "cycle"
//!
//! [[references]]
//! kind = "lissajous-ellipse"
//! amp_x = -1.0
//! amp_y = 2.0
//! phase = "sin-first"
//!
//! [sim]
//! dt = 0.001
//! t_end = 25.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControllerGains;
use crate::engine::reference::{ReferenceSpec, VelocityEnvelope, MIN_REFERENCE_SPEED};
use crate::engine::{Scenario, SimSettings};
use crate::error::{Error, Result, Violation};
use crate::graph::{FleetGraph, GraphViolation};
use crate::model::VehicleParams;
use crate::observer::ObserverGains;
use crate::rbf::{RbfLattice, DEFAULT_ACTIVATION_THRESHOLD};

/// Environment variable that overrides `sim.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

fn default_threshold() -> f64 {
    DEFAULT_ACTIVATION_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfConfig {
    pub box_min: [f64; 2],
    pub box_max: [f64; 2],
    pub nodes_per_dim: [usize; 2],
    pub width: f64,
    #[serde(default = "default_threshold")]
    pub activation_threshold: f64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            box_min: [0.0, 0.0],
            box_max: [4.0, 4.0],
            nodes_per_dim: [5, 5],
            width: 0.7,
            activation_threshold: DEFAULT_ACTIVATION_THRESHOLD,
        }
    }
}

impl RbfConfig {
    pub fn lattice(&self) -> Result<RbfLattice> {
        RbfLattice::build(self.box_min, self.box_max, self.nodes_per_dim, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphPreset {
    Cycle,
    Complete,
    Path,
}

fn default_edge_weight() -> f64 {
    1.0
}

/// Either a named topology over all agents or an explicit adjacency matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<GraphPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    /// Edge weight for presets.
    #[serde(default = "default_edge_weight")]
    pub weight: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            preset: Some(GraphPreset::Cycle),
            adjacency: None,
            weight: 1.0,
        }
    }
}

impl GraphConfig {
    pub fn build(&self, agents: usize) -> std::result::Result<FleetGraph, Violation> {
        match (self.preset, &self.adjacency) {
            (Some(p), None) => Ok(match p {
                GraphPreset::Cycle => FleetGraph::cycle(agents, self.weight),
                GraphPreset::Complete => FleetGraph::complete(agents, self.weight),
                GraphPreset::Path => FleetGraph::path(agents, self.weight),
            }),
            (None, Some(rows)) => {
                let g = FleetGraph::from_rows(rows)
                    .ok_or_else(|| Violation::new("graph.adjacency", "matrix must be square"))?;
                if g.agents() != agents {
                    return Err(Violation::new(
                        "graph.adjacency",
                        format!("{0}x{0} matrix for {agents} agents", g.agents()),
                    ));
                }
                Ok(g)
            }
            _ => Err(Violation::new(
                "graph",
                "set exactly one of `preset` or `adjacency`",
            )),
        }
    }
}

fn default_log_interval() -> f64 {
    0.01
}

fn default_snapshot_interval() -> f64 {
    0.1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
    #[serde(default = "default_log_interval")]
    pub log_interval: f64,
    /// Averaging window for `W̄`; defaults to the last 40 % of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consolidation_window: Option<[f64; 2]>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 25.0,
            snapshot_interval: default_snapshot_interval(),
            log_interval: default_log_interval(),
            consolidation_window: None,
            output_dir: default_output_dir(),
        }
    }
}

impl SimConfig {
    pub fn settings(&self) -> SimSettings {
        SimSettings {
            dt: self.dt,
            t_end: self.t_end,
            log_interval: self.log_interval,
            snapshot_interval: self.snapshot_interval,
        }
    }

    /// Fraction of the run covered by default trailing windows.
    pub const TRAILING_FRACTION: f64 = 0.4;

    pub fn consolidation_window(&self) -> [f64; 2] {
        self.consolidation_window
            .unwrap_or([(1.0 - Self::TRAILING_FRACTION) * self.t_end, self.t_end])
    }
}

/// Complete description of a fleet scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetConfig {
    pub vehicle: VehicleParams,
    pub observer: ObserverGains,
    pub gains: ControllerGains,
    pub rbf: RbfConfig,
    pub graph: GraphConfig,
    pub references: Vec<ReferenceSpec>,
    pub sim: SimConfig,
}

impl Default for FleetConfig {
    /// The four-vehicle scenario on a ring with the reference parameter set.
    fn default() -> Self {
        Self {
            vehicle: VehicleParams::default(),
            observer: ObserverGains::default(),
            gains: ControllerGains::default(),
            rbf: RbfConfig::default(),
            graph: GraphConfig::default(),
            references: ReferenceSpec::fleet_defaults(),
            sim: SimConfig::default(),
        }
    }
}

/// Outcome of [`FleetConfig::check`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigReport {
    pub violations: Vec<Violation>,
    /// Findings that do not block a run.
    pub warnings: Vec<Violation>,
}

impl ConfigReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Which phase a config is being checked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Consensus needs a connected graph.
    Learning,
    /// No communication; a disconnected graph only warns.
    Experience,
}

impl FleetConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// `sim.output_dir`, unless `OUTPUT_DIR` is set.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| self.sim.output_dir.clone())
    }

    /// Every violated invariant for the learning phase.
    pub fn validate(&self) -> Vec<Violation> {
        self.check(RunMode::Learning).violations
    }

    pub fn check(&self, mode: RunMode) -> ConfigReport {
        let mut r = ConfigReport::default();
        r.violations.extend(self.vehicle.validate());
        r.violations.extend(self.observer.validate());
        r.violations.extend(self.gains.validate());
        self.check_sim(&mut r);
        let n = self.references.len();
        if n == 0 {
            r.violations.push(Violation::new(
                "references",
                "at least one reference is required",
            ));
        }
        match self.graph.build(n) {
            Ok(g) => {
                for v in g.validate() {
                    let item = Violation::new("graph", v.to_string());
                    match (v, mode) {
                        (GraphViolation::Disconnected { .. }, RunMode::Experience) => {
                            r.warnings.push(item)
                        }
                        _ => r.violations.push(item),
                    }
                }
            }
            Err(v) => r.violations.push(v),
        }
        let lattice = match self.rbf.lattice() {
            Ok(l) => Some(l),
            Err(e) => {
                r.violations.push(Violation::new("rbf", e.to_string()));
                None
            }
        };
        let t = self.rbf.activation_threshold;
        if !(t.is_finite() && t > 0.0 && t < 1.0) {
            r.violations.push(Violation::new(
                "rbf.activation_threshold",
                format!("must lie in (0, 1), got {t}"),
            ));
        }
        for (i, spec) in self.references.iter().enumerate() {
            let field = format!("references[{}]", i + 1);
            let structural = spec.validate(&field);
            if !structural.is_empty() {
                r.violations.extend(structural);
                continue;
            }
            let env = spec.compile().velocity_envelope();
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            let too_slow = !(env.v_min > MIN_REFERENCE_SPEED);
            if too_slow {
                r.violations.push(Violation::new(
                    field,
                    format!("reference speed crosses zero (min speed {:.3e})", env.v_min),
                ));
                continue;
            }
            if let Some(lat) = &lattice {
                check_coverage(&field, &env, lat, &mut r);
            }
        }
        r
    }

    fn check_sim(&self, r: &mut ConfigReport) {
        let s = &self.sim;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            r.violations.push(Violation::new(
                "sim.dt",
                format!("must be finite and > 0, got {}", s.dt),
            ));
            return;
        }
        let limit = self.observer.delta / 10.0;
        if s.dt > limit * (1.0 + 1e-12) {
            r.violations.push(Violation::new(
                "sim.dt",
                format!("dt = {} exceeds delta/10 = {limit}", s.dt),
            ));
        }
        if !(s.t_end.is_finite() && s.t_end >= 0.0) {
            r.violations.push(Violation::new(
                "sim.t_end",
                format!("must be finite and >= 0, got {}", s.t_end),
            ));
        }
        for (name, v) in [
            ("snapshot_interval", s.snapshot_interval),
            ("log_interval", s.log_interval),
        ] {
            if !(v.is_finite() && v >= s.dt * (1.0 - 1e-12)) {
                r.violations.push(Violation::new(
                    format!("sim.{name}"),
                    format!("must be >= dt, got {v}"),
                ));
            }
        }
        if let Some([a, b]) = s.consolidation_window {
            if !(a >= 0.0 && b >= a && b <= s.t_end + 1e-9) {
                r.violations.push(Violation::new(
                    "sim.consolidation_window",
                    format!("[{a}, {b}] must satisfy 0 <= start <= end <= t_end"),
                ));
            }
        }
    }

    /// Validate for `mode` and compile into a runnable scenario.
    pub fn scenario(&self, mode: RunMode) -> Result<Scenario> {
        let report = self.check(mode);
        for w in &report.warnings {
            log::warn!("{w}");
        }
        if !report.is_clean() {
            return Err(Error::Validation(report.violations));
        }
        let n = self.references.len();
        Ok(Scenario {
            vehicle: self.vehicle,
            observer: self.observer,
            gains: self.gains,
            lattice: self.rbf.lattice()?,
            graph: self
                .graph
                .build(n)
                .map_err(|v| Error::Validation(vec![v]))?,
            references: self.references.iter().map(ReferenceSpec::compile).collect(),
            settings: self.sim.settings(),
        })
    }
}

/// The `(v_r, ω_r)` range must lie inside the lattice box; less than one
/// lattice spacing of margin only warns.
fn check_coverage(field: &str, env: &VelocityEnvelope, lat: &RbfLattice, r: &mut ConfigReport) {
    let (lo, hi, h) = (lat.box_min(), lat.box_max(), lat.spacing());
    let ranges = [
        ("v_r", env.v_min, env.v_max),
        ("omega_r", env.omega_min, env.omega_max),
    ];
    for (d, (name, min, max)) in ranges.into_iter().enumerate() {
        if min < lo[d] || max > hi[d] {
            r.violations.push(Violation::new(
                field,
                format!(
                    "{name} range [{min:.3}, {max:.3}] leaves the RBF box [{}, {}]",
                    lo[d], hi[d]
                ),
            ));
        } else {
            let margin = (min - lo[d]).min(hi[d] - max);
            if margin < h[d] * (1.0 - 1e-9) {
                r.warnings.push(Violation::new(
                    field,
                    format!(
                        "{name} range [{min:.3}, {max:.3}] is within {margin:.3} of the RBF box edge (spacing {})",
                        h[d]
                    ),
                ));
            }
        }
    }
}
