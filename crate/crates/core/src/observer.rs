//! High-gain observer for the body velocities.
//!
//! Only the pose is measured. The heading channel `(θ̂, ω̂)` is a standard
//! second-order high-gain observer on `θ`. The speed channel runs the same
//! structure on `p_x`, the x-coordinate of the position expressed in a frame
//! that rotates with the vehicle, whose derivative is `ṗ_x = v + p_y ω`.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::model::{BodyVelocity, GeneralCoordinates};

/// Gains `l1`, `l2` and the small time constant `δ`.
///
/// Some texts call `δ` `ε`; it is the same parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverGains {
    pub l1: f64,
    pub l2: f64,
    pub delta: f64,
}

impl Default for ObserverGains {
    fn default() -> Self {
        Self {
            l1: 1.0,
            l2: 1.0,
            delta: 0.01,
        }
    }
}

impl ObserverGains {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("delta", self.delta)] {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    format!("observer.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverState {
    pub theta_hat: f64,
    pub omega_hat: f64,
    pub px_hat: f64,
    pub v_hat: f64,
}

impl ObserverState {
    /// Start with zero velocity estimates and the position/heading estimates
    /// matching the first measurement, so there is no initial innovation.
    pub fn initialized_from(q: &GeneralCoordinates) -> Self {
        let (px, _) = rotating_frame(q);
        Self {
            theta_hat: q.theta,
            omega_hat: 0.0,
            px_hat: px,
            v_hat: 0.0,
        }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.theta_hat, self.omega_hat, self.px_hat, self.v_hat)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            theta_hat: s[0],
            omega_hat: s[1],
            px_hat: s[2],
            v_hat: s[3],
        }
    }
}

/// Position projected on world-origin axes parallel to the body frame.
pub fn rotating_frame(q: &GeneralCoordinates) -> (f64, f64) {
    let (s, c) = q.theta.sin_cos();
    (q.x * c + q.y * s, q.y * c - q.x * s)
}

/// Time derivative of the observer state given the measured heading and the
/// measured rotating-frame position `(p_x, p_y)`.
pub fn observer_rates(
    s: &ObserverState,
    g: &ObserverGains,
    theta_meas: f64,
    p_meas: (f64, f64),
) -> Vector4<f64> {
    let k1 = g.l1 / g.delta;
    let k2 = g.l2 / (g.delta * g.delta);
    let e_theta = theta_meas - s.theta_hat;
    let e_px = p_meas.0 - s.px_hat;
    Vector4::new(
        s.omega_hat + k1 * e_theta,
        k2 * e_theta,
        s.v_hat + p_meas.1 * s.omega_hat + k1 * e_px,
        k2 * e_px,
    )
}

/// Velocity estimate `û = (v̂, ω̂)`.
pub fn estimate(s: &ObserverState) -> BodyVelocity {
    BodyVelocity::new(s.v_hat, s.omega_hat)
}
