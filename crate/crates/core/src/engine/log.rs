//! Run records, weight snapshots and their on-disk formats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector2;

use crate::control::{ReferenceSample, TrackingError, WeightSnapshot};
use crate::error::{Error, Result};
use crate::model::{BodyVelocity, GeneralCoordinates, TransformedTorque};
use crate::rbf::{RbfLattice, WeightMatrix};

/// Column order of the run log CSV.
pub const LOG_COLUMNS: [&str; 21] = [
    "t",
    "agent",
    "x",
    "y",
    "theta",
    "v",
    "omega",
    "v_hat",
    "omega_hat",
    "x_r",
    "y_r",
    "theta_r",
    "ex",
    "ey",
    "etheta",
    "tau_v",
    "tau_w",
    "sat_flag",
    "est_err_v",
    "est_err_w",
    "V_diag",
];

/// One agent at one logged instant. `agent` is zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub agent: usize,
    pub q: GeneralCoordinates,
    pub u: BodyVelocity,
    pub u_hat: BodyVelocity,
    pub reference: ReferenceSample,
    pub error: TrackingError,
    pub u_c: BodyVelocity,
    pub tau: TransformedTorque,
    pub saturated: bool,
    /// `H(u)` at the true velocity.
    pub h: Vector2<f64>,
    /// `H(u) − ŴᵀS(u)` with the weights of this instant.
    pub est_err: Vector2<f64>,
    /// Lyapunov diagnostic without the weight-error term.
    pub v_diag: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetSnapshot {
    pub t: f64,
    pub weights: Vec<WeightMatrix>,
}

/// Output of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub agents: usize,
    pub dt: f64,
    /// Reference index followed by each agent.
    pub assignment: Vec<usize>,
    pub learning: bool,
    /// Grouped by time, agents in index order within each time.
    pub records: Vec<Record>,
    pub snapshots: Vec<FleetSnapshot>,
}

impl RunLog {
    pub fn new(agents: usize, dt: f64, assignment: Vec<usize>, learning: bool) -> Self {
        Self {
            agents,
            dt,
            assignment,
            learning,
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn t_end(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn agent_records(&self, i: usize) -> impl Iterator<Item = &Record> + '_ {
        self.records.iter().filter(move |r| r.agent == i)
    }

    /// Records of agent `i` with `t ≥ t0`.
    pub fn agent_window(&self, i: usize, t0: f64) -> impl Iterator<Item = &Record> + '_ {
        self.agent_records(i).filter(move |r| r.t >= t0 - 1e-9)
    }

    /// Weight history of agent `i` for consolidation.
    pub fn weight_history(&self, i: usize) -> Vec<WeightSnapshot> {
        self.snapshots
            .iter()
            .map(|s| WeightSnapshot {
                t: s.t,
                weights: s.weights[i].clone(),
            })
            .collect()
    }

    pub fn final_weights(&self) -> Vec<WeightMatrix> {
        self.snapshots
            .last()
            .map(|s| s.weights.clone())
            .unwrap_or_default()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{}", LOG_COLUMNS.join(","))?;
        for r in &self.records {
            let fields = [
                r.q.x,
                r.q.y,
                r.q.theta,
                r.u.v,
                r.u.omega,
                r.u_hat.v,
                r.u_hat.omega,
                r.reference.x_r,
                r.reference.y_r,
                r.reference.theta_r,
                r.error.ex,
                r.error.ey,
                r.error.etheta,
                r.tau.tau_v,
                r.tau.tau_w,
            ];
            write!(out, "{},{}", sig9(r.t), r.agent + 1)?;
            for f in fields {
                write!(out, ",{}", sig9(f))?;
            }
            writeln!(
                out,
                ",{},{},{},{}",
                u8::from(r.saturated),
                sig9(r.est_err[0]),
                sig9(r.est_err[1]),
                sig9(r.v_diag)
            )?;
        }
        out.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(f)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    /// Write every snapshot as `weights_agent<i>_t<millis>.csv` into `dir`.
    pub fn save_snapshots(&self, lattice: &RbfLattice, dir: &Path) -> Result<()> {
        for s in &self.snapshots {
            let millis = (s.t * 1000.0).round() as u64;
            for (i, w) in s.weights.iter().enumerate() {
                w.save(lattice, &dir.join(snapshot_file_name(i, millis)))?;
            }
        }
        Ok(())
    }
}

/// File name of agent `i`'s (zero-based) snapshot at `millis`.
pub fn snapshot_file_name(i: usize, millis: u64) -> String {
    format!("weights_agent{}_t{millis}.csv", i + 1)
}

/// File name of agent `i`'s (zero-based) consolidated weights.
pub fn consolidated_file_name(i: usize) -> String {
    format!("wbar_agent{}.csv", i + 1)
}

/// Format with nine significant digits, trimming trailing zeros.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let s = format!("{x:.8e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(sig9(123456.789012), "123456.789");
        assert_eq!(sig9(1.0e-7), "1e-7");
        assert_eq!(sig9(-1.234567891e-6), "-1.23456789e-6");
        assert_eq!(sig9(2.5e12), "2.5e12");
        assert_eq!(sig9(0.001), "0.001");
    }

    #[test]
    fn file_names_are_one_based() {
        assert_eq!(snapshot_file_name(0, 2500), "weights_agent1_t2500.csv");
        assert_eq!(consolidated_file_name(3), "wbar_agent4.csv");
    }
}
