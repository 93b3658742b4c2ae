//! Post-run metrics computed from a [`RunLog`].
//!
//! These use the logged ground-truth velocities, which the controller never sees.

use std::fmt::Write as _;

use nalgebra::Vector2;

use super::log::RunLog;
use crate::model::{unknown_dynamics, BodyVelocity, VehicleParams};
use crate::rbf::{pe_level, predict, PeReport, RbfLattice, WeightMatrix};

/// RMS of the estimation error `H − ŴᵀS` and of `H` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationStats {
    /// Per channel `(v, ω)`.
    pub rms_err: [f64; 2],
    pub rms_h: [f64; 2],
}

impl EstimationStats {
    fn from_pairs<I: IntoIterator<Item = (Vector2<f64>, Vector2<f64>)>>(pairs: I) -> Self {
        let mut err = [0.0; 2];
        let mut h = [0.0; 2];
        let mut n = 0usize;
        for (e, hv) in pairs {
            for c in 0..2 {
                err[c] += e[c] * e[c];
                h[c] += hv[c] * hv[c];
            }
            n += 1;
        }
        let n = n.max(1) as f64;
        Self {
            rms_err: err.map(|s| (s / n).sqrt()),
            rms_h: h.map(|s| (s / n).sqrt()),
        }
    }

    /// RMS of the error vector norm.
    pub fn rms_err_norm(&self) -> f64 {
        self.rms_err[0].hypot(self.rms_err[1])
    }

    /// RMS of the `H` vector norm.
    pub fn rms_h_norm(&self) -> f64 {
        self.rms_h[0].hypot(self.rms_h[1])
    }

    /// Error relative to the size of `H`, both taken as vector-norm RMS.
    pub fn relative(&self) -> f64 {
        self.rms_err_norm() / self.rms_h_norm()
    }
}

/// Per-agent RMS of `H(X) − ŴᵀS(X)` over records with `t ≥ t0`, using the
/// weights each record was logged with.
pub fn metric_estimation_error(log: &RunLog, t0: f64) -> Vec<EstimationStats> {
    (0..log.agents)
        .map(|i| EstimationStats::from_pairs(log.agent_window(i, t0).map(|r| (r.est_err, r.h))))
        .collect()
}

/// RMS of `H(X) − WᵀS(X)` for fixed weights along a velocity trajectory.
pub fn estimation_error_along(
    params: &VehicleParams,
    lattice: &RbfLattice,
    w: &WeightMatrix,
    trajectory: &[BodyVelocity],
) -> EstimationStats {
    EstimationStats::from_pairs(trajectory.iter().map(|u| {
        let h = unknown_dynamics(params, u);
        (h - predict(w, &lattice.eval_basis(u.to_vector())), h)
    }))
}

/// `max_{i,j} ‖W_i − W_j‖_F`.
pub fn consensus_diameter(weights: &[WeightMatrix]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in weights.iter().enumerate() {
        for b in &weights[i + 1..] {
            d = d.max((&a.0 - &b.0).norm());
        }
    }
    d
}

/// Consensus diameter of the weights at the end of the run.
pub fn metric_consensus(log: &RunLog) -> f64 {
    consensus_diameter(&log.final_weights())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStats {
    /// Maximum of `√(x̃² + ỹ²)`.
    pub max_position: f64,
    /// Maximum of `|θ̃|`.
    pub max_heading: f64,
    pub rms_position: f64,
}

/// Per-agent tracking statistics over records with `t ≥ t0`.
pub fn metric_tracking(log: &RunLog, t0: f64) -> Vec<TrackingStats> {
    (0..log.agents)
        .map(|i| {
            let mut s = TrackingStats {
                max_position: 0.0,
                max_heading: 0.0,
                rms_position: 0.0,
            };
            let mut n = 0usize;
            for r in log.agent_window(i, t0) {
                let p = r.error.position_norm();
                s.max_position = s.max_position.max(p);
                s.max_heading = s.max_heading.max(r.error.etheta.abs());
                s.rms_position += p * p;
                n += 1;
            }
            s.rms_position = (s.rms_position / n.max(1) as f64).sqrt();
            s
        })
        .collect()
}

/// Per-agent maximum of `|v − v̂|` and `|ω − ω̂|` over records with `t > t0`.
pub fn observer_error_max(log: &RunLog, t0: f64) -> Vec<[f64; 2]> {
    (0..log.agents)
        .map(|i| {
            log.agent_records(i)
                .filter(|r| r.t > t0)
                .fold([0.0f64; 2], |m, r| {
                    [
                        m[0].max((r.u.v - r.u_hat.v).abs()),
                        m[1].max((r.u.omega - r.u_hat.omega).abs()),
                    ]
                })
        })
        .collect()
}

/// Fleet Lyapunov diagnostic `Σ_i V_i` at every logged time.
pub fn fleet_lyapunov(log: &RunLog) -> Vec<(f64, f64)> {
    log.records
        .chunks(log.agents.max(1))
        .map(|c| (c[0].t, c.iter().map(|r| r.v_diag).sum()))
        .collect()
}

/// Value of a time series at the sample closest to `t`.
pub fn sample_at(series: &[(f64, f64)], t: f64) -> Option<f64> {
    series
        .iter()
        .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
        .map(|p| p.1)
}

/// PE level of each agent's realized velocity trajectory over `[t0, t_end]`.
pub fn metric_pe(log: &RunLog, lattice: &RbfLattice, t0: f64, threshold: f64) -> Vec<PeReport> {
    (0..log.agents)
        .map(|i| {
            let recs: Vec<_> = log.agent_window(i, t0).collect();
            let traj: Vec<Vector2<f64>> = recs.iter().map(|r| r.u.to_vector()).collect();
            let dt = if recs.len() > 1 {
                recs[1].t - recs[0].t
            } else {
                log.dt
            };
            pe_level(lattice, &traj, dt, threshold)
        })
        .collect()
}

/// Flat `name=value` metrics file contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSummary {
    entries: Vec<(String, f64)>,
}

impl MetricsSummary {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (n, v) in &self.entries {
            let _ = writeln!(s, "{n}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .filter_map(|(n, v)| Some((n.trim().to_string(), v.trim().parse().ok()?)))
            .collect();
        Self { entries }
    }
}

/// Standard metric set for a run, with trailing windows measured back from the end.
pub fn summarize(log: &RunLog, lattice: &RbfLattice, window: f64) -> MetricsSummary {
    let t_end = log.t_end();
    let t0 = t_end - window;
    let mut m = MetricsSummary::default();
    m.push("t_end", t_end);
    m.push("window_start", t0);
    for (i, s) in metric_tracking(log, t0).iter().enumerate() {
        m.push(
            format!("agent{}.tracking_max_position", i + 1),
            s.max_position,
        );
        m.push(
            format!("agent{}.tracking_max_heading", i + 1),
            s.max_heading,
        );
        m.push(
            format!("agent{}.tracking_rms_position", i + 1),
            s.rms_position,
        );
    }
    for (i, e) in observer_error_max(log, t0).iter().enumerate() {
        m.push(format!("agent{}.observer_max_err_v", i + 1), e[0]);
        m.push(format!("agent{}.observer_max_err_w", i + 1), e[1]);
    }
    for (i, s) in metric_estimation_error(log, t0).iter().enumerate() {
        m.push(format!("agent{}.estimation_rms_err_v", i + 1), s.rms_err[0]);
        m.push(format!("agent{}.estimation_rms_err_w", i + 1), s.rms_err[1]);
        m.push(format!("agent{}.estimation_relative", i + 1), s.relative());
    }
    m.push("consensus_diameter", metric_consensus(log));
    let v = fleet_lyapunov(log);
    if let (Some(first), Some(last)) = (v.first(), v.last()) {
        m.push("lyapunov_initial", first.1);
        m.push("lyapunov_final", last.1);
    }
    for (i, pe) in metric_pe(log, lattice, t0, crate::rbf::DEFAULT_ACTIVATION_THRESHOLD)
        .iter()
        .enumerate()
    {
        m.push(format!("agent{}.pe_level", i + 1), pe.level);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ReferenceSample, TrackingError};
    use crate::engine::log::Record;
    use crate::model::{GeneralCoordinates, TransformedTorque};
    use nalgebra::MatrixXx2;

    fn record(t: f64, agent: usize, ex: f64, ey: f64) -> Record {
        Record {
            t,
            agent,
            q: GeneralCoordinates::new(0.0, 0.0, 0.0),
            u: BodyVelocity::new(1.0, 0.5),
            u_hat: BodyVelocity::new(1.0, 0.5),
            reference: ReferenceSample::default(),
            error: TrackingError {
                ex,
                ey,
                etheta: 0.0,
            },
            u_c: BodyVelocity::new(1.0, 0.5),
            tau: TransformedTorque::default(),
            saturated: false,
            h: Vector2::zeros(),
            est_err: Vector2::zeros(),
            v_diag: 0.0,
        }
    }

    #[test]
    fn identical_weights_have_zero_diameter() {
        let w = WeightMatrix(MatrixXx2::from_fn(25, |i, j| i as f64 - j as f64));
        assert_eq!(consensus_diameter(&[w.clone(), w.clone(), w]), 0.0);
    }

    #[test]
    fn one_differing_entry_gives_unit_diameter() {
        let a = WeightMatrix::zeros(25);
        let mut b = WeightMatrix::zeros(25);
        b.0[(7, 1)] = 1.0;
        assert_eq!(consensus_diameter(&[a.clone(), b, a]), 1.0);
    }

    #[test]
    fn constant_offset_tracking() {
        let mut log = RunLog::new(1, 0.01, vec![0], true);
        for k in 0..10 {
            log.records.push(record(k as f64, 0, 0.3, 0.4));
        }
        let s = metric_tracking(&log, 0.0)[0];
        assert!((s.max_position - 0.5).abs() < 1e-15);
        assert!((s.rms_position - 0.5).abs() < 1e-15);
        assert_eq!(s.max_heading, 0.0);
    }

    #[test]
    fn tracking_window_excludes_early_records() {
        let mut log = RunLog::new(1, 0.01, vec![0], true);
        log.records.push(record(0.0, 0, 3.0, 4.0));
        log.records.push(record(1.0, 0, 0.3, 0.4));
        assert_eq!(metric_tracking(&log, 0.5)[0].max_position, 0.5);
        assert_eq!(metric_tracking(&log, 0.0)[0].max_position, 5.0);
    }

    #[test]
    fn zero_weights_error_equals_h() {
        let p = VehicleParams::default();
        let lat = RbfLattice::build([0.0, 0.0], [4.0, 4.0], [5, 5], 0.7).unwrap();
        let traj: Vec<_> = (0..200)
            .map(|k| {
                BodyVelocity::new(
                    1.5 + (0.05 * k as f64).sin(),
                    0.5 + 0.3 * (0.03 * k as f64).cos(),
                )
            })
            .collect();
        let s = estimation_error_along(&p, &lat, &WeightMatrix::zeros(25), &traj);
        assert_eq!(s.rms_err, s.rms_h);
        assert!((s.relative() - 1.0).abs() < 1e-15);
        let manual = (traj
            .iter()
            .map(|u| unknown_dynamics(&p, u)[0].powi(2))
            .sum::<f64>()
            / 200.0)
            .sqrt();
        assert!((s.rms_h[0] - manual).abs() < 1e-12);
    }

    #[test]
    fn metrics_text_round_trip() {
        let mut m = MetricsSummary::default();
        m.push("a", 1.25);
        m.push("agent1.b", -3e-7);
        let back = MetricsSummary::parse(&m.to_text());
        assert_eq!(back, m);
        assert_eq!(back.get("agent1.b"), Some(-3e-7));
        assert_eq!(back.get("missing"), None);
    }

    #[test]
    fn lyapunov_sums_agents() {
        let mut log = RunLog::new(2, 0.01, vec![0, 1], true);
        for k in 0..3 {
            for i in 0..2 {
                let mut r = record(k as f64, i, 0.0, 0.0);
                r.v_diag = (i + 1) as f64 * (3 - k) as f64;
                log.records.push(r);
            }
        }
        let v = fleet_lyapunov(&log);
        assert_eq!(v, vec![(0.0, 9.0), (1.0, 6.0), (2.0, 3.0)]);
        assert_eq!(sample_at(&v, 1.2), Some(6.0));
    }
}
