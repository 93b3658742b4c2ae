//! Backstepping tracking controller with an adaptive RBF compensator.
//!
//! The controller only ever sees the measured pose, the observer estimate
//! `û`, the reference, and the reduced inertia `M̄`. Friction and Coriolis
//! terms are unknown to it and are compensated by the network output `ŴᵀS`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DVector, Matrix2, MatrixXx2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::model::{BodyVelocity, GeneralCoordinates, TransformedTorque};
use crate::rbf::{predict, WeightMatrix};

/// Tracking error expressed in the body frame; `etheta ∈ (−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingError {
    pub ex: f64,
    pub ey: f64,
    pub etheta: f64,
}

impl TrackingError {
    pub fn position_norm(&self) -> f64 {
        self.ex.hypot(self.ey)
    }
}

fn default_tau_max() -> f64 {
    50.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub kx: f64,
    pub ky: f64,
    pub ktheta: f64,
    pub ku: f64,
    /// Learning rate `Γ`.
    pub gamma_big: f64,
    /// Leakage `γ`.
    pub gamma_small: f64,
    /// Consensus coupling `β`.
    pub beta: f64,
    /// Per-channel bound on `τ̄`.
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kx: 1.0,
            ky: 1.0,
            ktheta: 1.0,
            ku: 2.0,
            gamma_big: 10.0,
            gamma_small: 0.001,
            beta: 10.0,
            tau_max: default_tau_max(),
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [
            ("kx", self.kx),
            ("ky", self.ky),
            ("ktheta", self.ktheta),
            ("ku", self.ku),
            ("gamma_big", self.gamma_big),
            ("tau_max", self.tau_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    format!("gains.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("gamma_small", self.gamma_small), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(
                    format!("gains.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        out
    }
}

/// Reference pose, velocities and their first derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub x_r: f64,
    pub y_r: f64,
    pub theta_r: f64,
    pub v_r: f64,
    pub omega_r: f64,
    pub vdot_r: f64,
    pub omegadot_r: f64,
}

/// Wrap into `(−π, π]`; `−π` maps to `+π`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn tracking_error(q: &GeneralCoordinates, r: &ReferenceSample) -> TrackingError {
    let (s, c) = q.theta.sin_cos();
    let dx = r.x_r - q.x;
    let dy = r.y_r - q.y;
    TrackingError {
        ex: c * dx + s * dy,
        ey: -s * dx + c * dy,
        etheta: wrap_angle(r.theta_r - q.theta),
    }
}

/// Kinematic virtual velocity `u_c`.
pub fn virtual_velocity(
    e: &TrackingError,
    r: &ReferenceSample,
    g: &ControllerGains,
) -> BodyVelocity {
    BodyVelocity::new(
        r.v_r * e.etheta.cos() + g.kx * e.ex,
        r.omega_r + r.v_r * g.ky * e.ey + g.ktheta * e.etheta.sin(),
    )
}

/// Analytic `u̇_c`, using the error dynamics with `(v, ω)` replaced by `û`.
pub fn virtual_velocity_rate(
    e: &TrackingError,
    r: &ReferenceSample,
    u_hat: &BodyVelocity,
    g: &ControllerGains,
) -> Vector2<f64> {
    let (sth, cth) = e.etheta.sin_cos();
    let etheta_dot = r.omega_r - u_hat.omega;
    let ex_dot = r.v_r * cth + u_hat.omega * e.ey - u_hat.v;
    let ey_dot = r.v_r * sth - u_hat.omega * e.ex;
    Vector2::new(
        r.vdot_r * cth - r.v_r * sth * etheta_dot + g.kx * ex_dot,
        r.omegadot_r + r.vdot_r * g.ky * e.ey + r.v_r * g.ky * ey_dot + g.ktheta * cth * etheta_dot,
    )
}

/// Output of the torque laws before and after saturation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueCommand {
    pub tau: TransformedTorque,
    pub unsaturated: TransformedTorque,
    pub saturated: bool,
}

#[allow(clippy::too_many_arguments)]
fn nn_torque(
    e: &TrackingError,
    r: &ReferenceSample,
    u_hat: &BodyVelocity,
    u_c_dot: &Vector2<f64>,
    w: &WeightMatrix,
    s: &DVector<f64>,
    g: &ControllerGains,
    m_bar: &Matrix2<f64>,
) -> TorqueCommand {
    let u_c = virtual_velocity(e, r, g).to_vector();
    let raw = m_bar * u_c_dot
        + predict(w, s)
        + g.ku * (u_c - u_hat.to_vector())
        + Vector2::new(e.ex, e.etheta.sin() / g.ky);
    let unsaturated = TransformedTorque::from_vector(raw);
    let (tau, saturated) = unsaturated.saturate(g.tau_max);
    TorqueCommand {
        tau,
        unsaturated,
        saturated,
    }
}

/// Learning-phase torque `τ̄ = M̄u̇_c + ŴᵀS + K_u(u_c − û) + (x̃, sinθ̃/K_y)`, clamped.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_torque(
    e: &TrackingError,
    r: &ReferenceSample,
    u_hat: &BodyVelocity,
    u_c_dot: &Vector2<f64>,
    w_hat: &WeightMatrix,
    s: &DVector<f64>,
    g: &ControllerGains,
    m_bar: &Matrix2<f64>,
) -> TorqueCommand {
    nn_torque(e, r, u_hat, u_c_dot, w_hat, s, g, m_bar)
}

/// Experience-phase torque: same law with the frozen consolidated weights `W̄`.
#[allow(clippy::too_many_arguments)]
pub fn experience_torque(
    e: &TrackingError,
    r: &ReferenceSample,
    u_hat: &BodyVelocity,
    u_c_dot: &Vector2<f64>,
    w_bar: &WeightMatrix,
    s: &DVector<f64>,
    g: &ControllerGains,
    m_bar: &Matrix2<f64>,
) -> TorqueCommand {
    nn_torque(e, r, u_hat, u_c_dot, w_bar, s, g, m_bar)
}

/// Cooperative weight law
/// `Ẇ_i = Γ S ũᵀ − γ Ŵ_i − β Σ_j a_ij (Ŵ_i − Ŵ_j)`.
///
/// `u_tilde` is the measurable surrogate `u_c − û`.
pub fn weight_update_rate(
    s: &DVector<f64>,
    u_tilde: &Vector2<f64>,
    w_i: &WeightMatrix,
    neighbors: &[(f64, &WeightMatrix)],
    g: &ControllerGains,
) -> MatrixXx2<f64> {
    let mut rate = s * u_tilde.transpose() * g.gamma_big - &w_i.0 * g.gamma_small;
    for (a_ij, w_j) in neighbors {
        if *a_ij != 0.0 {
            rate -= (&w_i.0 - &w_j.0) * (g.beta * a_ij);
        }
    }
    rate
}

/// One agent's weights at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSnapshot {
    pub t: f64,
    pub weights: WeightMatrix,
}

const WINDOW_TOL: f64 = 1e-9;

/// Time average of the piecewise-linear weight history over `[t_a, t_b]`.
///
/// A zero-length window returns the (interpolated) weights at `t_a`.
pub fn consolidate_weights(history: &[WeightSnapshot], t_a: f64, t_b: f64) -> Result<WeightMatrix> {
    let (first, last) = match (history.first(), history.last()) {
        (Some(f), Some(l)) => (f.t, l.t),
        _ => {
            return Err(Error::Window {
                t_a,
                t_b,
                first: f64::NAN,
                last: f64::NAN,
            })
        }
    };
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let reversed = !(t_b >= t_a);
    if reversed || t_a < first - WINDOW_TOL || t_b > last + WINDOW_TOL {
        return Err(Error::Window {
            t_a,
            t_b,
            first,
            last,
        });
    }
    let t_a = t_a.max(first);
    let t_b = t_b.min(last);
    let at = |t: f64| -> MatrixXx2<f64> {
        let k = history.partition_point(|s| s.t <= t);
        if k == 0 {
            return history[0].weights.0.clone();
        }
        if k == history.len() {
            return history[k - 1].weights.0.clone();
        }
        let (a, b) = (&history[k - 1], &history[k]);
        let lam = (t - a.t) / (b.t - a.t);
        &a.weights.0 * (1.0 - lam) + &b.weights.0 * lam
    };
    if t_b - t_a <= WINDOW_TOL {
        return Ok(WeightMatrix(at(t_a)));
    }
    // Knots strictly inside the window, plus the interpolated end points.
    let mut knots: Vec<(f64, MatrixXx2<f64>)> = vec![(t_a, at(t_a))];
    knots.extend(
        history
            .iter()
            .filter(|s| s.t > t_a + WINDOW_TOL && s.t < t_b - WINDOW_TOL)
            .map(|s| (s.t, s.weights.0.clone())),
    );
    knots.push((t_b, at(t_b)));
    let mut acc = MatrixXx2::zeros(history[0].weights.nodes());
    for pair in knots.windows(2) {
        let h = pair[1].0 - pair[0].0;
        acc += (&pair[0].1 + &pair[1].1) * (0.5 * h);
    }
    Ok(WeightMatrix(acc / (t_b - t_a)))
}

/// Lyapunov diagnostic
/// `V = x̃²/2 + ỹ²/2 + (1 − cos θ̃)/K_y + ũᵀM̄ũ/2 + ‖W̃‖²_F/(2Γ)`.
///
/// Pass `w_tilde_norm_sq = 0` when the ideal weights are unknown, which is
/// always the case at run time.
pub fn lyapunov_value(
    e: &TrackingError,
    u_tilde: &Vector2<f64>,
    w_tilde_norm_sq: f64,
    g: &ControllerGains,
    m_bar: &Matrix2<f64>,
) -> f64 {
    0.5 * (e.ex * e.ex + e.ey * e.ey)
        + (1.0 - e.etheta.cos()) / g.ky
        + 0.5 * u_tilde.dot(&(m_bar * u_tilde))
        + w_tilde_norm_sq / (2.0 * g.gamma_big)
}
