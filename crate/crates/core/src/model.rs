//! Unicycle vehicle model.
//!
//! The runtime dynamics live in the reduced two-degree-of-freedom form
//!
//! ```text
//! M̄ u̇ + C̄(u) u + F̄(u) = τ̄,      u = (v, ω)
//! ```
//!
//! obtained by projecting the constrained three-degree-of-freedom Lagrangian
//! model onto the null space of the no-slip constraint. The full 3×3
//! quantities ([`full_inertia`], [`full_coriolis`], [`kinematic_jacobian`], …)
//! are kept so that the reduction can be cross-checked; nothing in the
//! simulation loop depends on them.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Violation;

/// Pose of one vehicle in the world frame. `theta` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralCoordinates {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl GeneralCoordinates {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Reduced body velocity `u = (v, ω)`. Also the input of the RBF network.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyVelocity {
    pub v: f64,
    pub omega: f64,
}

impl BodyVelocity {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.v, self.omega)
    }

    pub fn from_vector(u: Vector2<f64>) -> Self {
        Self::new(u[0], u[1])
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }
}

/// Coefficients of the velocity-dependent friction
/// `F̄ = (cv1·m·v + cv2·m·v², cw1·I·ω + cw2·I·ω²)`.
///
/// The squared terms are not sign-corrected, so for `v < 0` the quadratic
/// term pushes forward. This is the model as stated, not `v·|v|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionCoeffs {
    pub cv1: f64,
    pub cv2: f64,
    pub cw1: f64,
    pub cw2: f64,
}

impl Default for FrictionCoeffs {
    fn default() -> Self {
        Self {
            cv1: 0.1,
            cv2: 0.05,
            cw1: 0.2,
            cw2: 0.1,
        }
    }
}

impl FrictionCoeffs {
    pub const ZERO: FrictionCoeffs = FrictionCoeffs {
        cv1: 0.0,
        cv2: 0.0,
        cw1: 0.0,
        cw2: 0.0,
    };
}

fn default_com_offset() -> f64 {
    0.1
}

/// Physical parameters shared by every (homogeneous) vehicle of the fleet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// Mass `m` (kg).
    pub mass: f64,
    /// Moment of inertia `I` about the center of mass (kg·m²).
    pub inertia: f64,
    /// Half the wheel separation, `R` (m).
    pub half_track: f64,
    /// Wheel radius `r` (m).
    pub wheel_radius: f64,
    /// Distance `d` from the axle midpoint to the center of mass (m).
    #[serde(default = "default_com_offset")]
    pub com_offset: f64,
    #[serde(default)]
    pub friction: FrictionCoeffs,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 2.0,
            inertia: 0.2,
            half_track: 0.15,
            wheel_radius: 0.05,
            com_offset: default_com_offset(),
            friction: FrictionCoeffs::default(),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut positive = |name: &str, value: f64| {
            if !(value.is_finite() && value > 0.0) {
                out.push(Violation::new(
                    format!("vehicle.{name}"),
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        };
        positive("mass", self.mass);
        positive("inertia", self.inertia);
        positive("half_track", self.half_track);
        positive("wheel_radius", self.wheel_radius);
        if !(self.com_offset.is_finite() && self.com_offset >= 0.0) {
            out.push(Violation::new(
                "vehicle.com_offset",
                format!("must be finite and >= 0, got {}", self.com_offset),
            ));
        }
        let f = &self.friction;
        for (name, c) in [
            ("cv1", f.cv1),
            ("cv2", f.cv2),
            ("cw1", f.cw1),
            ("cw2", f.cw2),
        ] {
            if !c.is_finite() {
                out.push(Violation::new(
                    format!("vehicle.friction.{name}"),
                    "must be finite",
                ));
            }
        }
        out
    }
}

/// Transformed torque `τ̄ = (τ̄_v, τ̄_ω)`, the control input of the reduced dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransformedTorque {
    pub tau_v: f64,
    pub tau_w: f64,
}

impl TransformedTorque {
    pub fn new(tau_v: f64, tau_w: f64) -> Self {
        Self { tau_v, tau_w }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.tau_v, self.tau_w)
    }

    pub fn from_vector(t: Vector2<f64>) -> Self {
        Self::new(t[0], t[1])
    }

    /// Clamp each channel to `±bound`; the flag reports whether anything was cut.
    pub fn saturate(self, bound: f64) -> (Self, bool) {
        let tv = self.tau_v.clamp(-bound, bound);
        let tw = self.tau_w.clamp(-bound, bound);
        let hit = tv != self.tau_v || tw != self.tau_w;
        (Self::new(tv, tw), hit)
    }
}

/// Torque applied on the right and left driving wheels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelTorque {
    pub tau_right: f64,
    pub tau_left: f64,
}

/// Pose rate `(ẋ, ẏ, θ̇) = J(q) u` under the no-slip constraint.
pub fn kinematics(q: &GeneralCoordinates, u: &BodyVelocity) -> Vector3<f64> {
    let (s, c) = q.theta.sin_cos();
    Vector3::new(u.v * c, u.v * s, u.omega)
}

/// No-slip residual `Aᵀ(q) q̇ = ẋ sinθ − ẏ cosθ`.
pub fn constraint_residual(q: &GeneralCoordinates, pose_rate: &Vector3<f64>) -> f64 {
    constraint_matrix(q.theta).dot(pose_rate)
}

/// Reduced inertia `M̄ = diag(m, m d² + I)`.
pub fn reduced_inertia(p: &VehicleParams) -> Matrix2<f64> {
    Matrix2::new(
        p.mass,
        0.0,
        0.0,
        p.mass * p.com_offset * p.com_offset + p.inertia,
    )
}

/// Reduced Coriolis matrix `C̄ = [[0, −m d ω], [m d ω, 0]]`.
pub fn coriolis(p: &VehicleParams, omega: f64) -> Matrix2<f64> {
    let k = p.mass * p.com_offset * omega;
    Matrix2::new(0.0, -k, k, 0.0)
}

/// Friction vector `F̄(u)`.
pub fn friction(p: &VehicleParams, u: &BodyVelocity) -> Vector2<f64> {
    let f = &p.friction;
    Vector2::new(
        f.cv1 * p.mass * u.v + f.cv2 * p.mass * u.v * u.v,
        f.cw1 * p.inertia * u.omega + f.cw2 * p.inertia * u.omega * u.omega,
    )
}

/// The uncertain term `H(u) = C̄(u) u + F̄(u)` the RBF network has to learn.
///
/// Only the plant and the offline metrics call this; the controller never does.
pub fn unknown_dynamics(p: &VehicleParams, u: &BodyVelocity) -> Vector2<f64> {
    coriolis(p, u.omega) * u.to_vector() + friction(p, u)
}

/// Body acceleration `u̇ = M̄⁻¹ (τ̄ − C̄u − F̄)` (gravity is zero on the plane).
pub fn body_accel(
    p: &VehicleParams,
    u: &BodyVelocity,
    tau_bar: &TransformedTorque,
) -> Vector2<f64> {
    let m_bar = reduced_inertia(p);
    let rhs = tau_bar.to_vector() - unknown_dynamics(p, u);
    // M̄ is diagonal.
    Vector2::new(rhs[0] / m_bar[(0, 0)], rhs[1] / m_bar[(1, 1)])
}

/// The wheel-to-body map `τ̄ = [[1/r, 1/r], [R/r, −R/r]] τ`.
pub fn torque_map(p: &VehicleParams) -> Matrix2<f64> {
    let r = p.wheel_radius;
    let big_r = p.half_track;
    Matrix2::new(1.0 / r, 1.0 / r, big_r / r, -big_r / r)
}

/// Body torque produced by a pair of wheel torques.
pub fn transformed_torque(p: &VehicleParams, tau: &WheelTorque) -> TransformedTorque {
    TransformedTorque::from_vector(torque_map(p) * Vector2::new(tau.tau_right, tau.tau_left))
}

/// Wheel torques realizing a transformed torque (inverse of [`torque_map`]).
pub fn wheel_torques(p: &VehicleParams, tau_bar: &TransformedTorque) -> WheelTorque {
    let half_r = 0.5 * p.wheel_radius;
    let turn = tau_bar.tau_w / p.half_track;
    WheelTorque {
        tau_right: half_r * (tau_bar.tau_v + turn),
        tau_left: half_r * (tau_bar.tau_v - turn),
    }
}

/// Kinematic Jacobian `J(q)` with `q̇ = J u`.
pub fn kinematic_jacobian(theta: f64) -> Matrix3x2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3x2::new(c, 0.0, s, 0.0, 0.0, 1.0)
}

/// Time derivative of [`kinematic_jacobian`] for heading rate `omega`.
pub fn kinematic_jacobian_rate(theta: f64, omega: f64) -> Matrix3x2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3x2::new(-s * omega, 0.0, c * omega, 0.0, 0.0, 0.0)
}

/// Constraint covector `A(q) = (sinθ, −cosθ, 0)`.
pub fn constraint_matrix(theta: f64) -> Vector3<f64> {
    let (s, c) = theta.sin_cos();
    Vector3::new(s, -c, 0.0)
}

/// Input matrix `B(q)` projecting wheel torques onto `(x, y, θ)`.
pub fn input_matrix(p: &VehicleParams, theta: f64) -> Matrix3x2<f64> {
    let (s, c) = theta.sin_cos();
    let r = p.wheel_radius;
    let big_r = p.half_track;
    Matrix3x2::new(c, c, s, s, big_r, -big_r) / r
}

/// Full 3×3 inertia matrix of the Lagrangian model.
pub fn full_inertia(p: &VehicleParams, theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let m = p.mass;
    let md = m * p.com_offset;
    Matrix3::new(
        m,
        0.0,
        -md * s,
        0.0,
        m,
        md * c,
        -md * s,
        md * c,
        md * p.com_offset + p.inertia,
    )
}

/// Full 3×3 centripetal/Coriolis matrix (Christoffel construction).
pub fn full_coriolis(p: &VehicleParams, theta: f64, theta_dot: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let md = p.mass * p.com_offset;
    Matrix3::new(
        0.0,
        0.0,
        -md * theta_dot * c,
        0.0,
        0.0,
        -md * theta_dot * s,
        0.0,
        0.0,
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn params(m: f64, i: f64, d: f64) -> VehicleParams {
        VehicleParams {
            mass: m,
            inertia: i,
            com_offset: d,
            ..VehicleParams::default()
        }
    }

    #[test]
    fn kinematics_examples() {
        let r = kinematics(
            &GeneralCoordinates::new(0.0, 0.0, 0.0),
            &BodyVelocity::new(1.0, 0.5),
        );
        assert_eq!(r, Vector3::new(1.0, 0.0, 0.5));

        let r = kinematics(
            &GeneralCoordinates::new(3.0, -1.0, FRAC_PI_2),
            &BodyVelocity::new(2.0, 0.0),
        );
        assert_abs_diff_eq!(r, Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-15);

        let r = kinematics(
            &GeneralCoordinates::new(0.0, 0.0, FRAC_PI_4),
            &BodyVelocity::new(1.0, 1.0),
        );
        assert_abs_diff_eq!(
            r,
            Vector3::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn constraint_residual_examples() {
        let q = GeneralCoordinates::new(0.0, 0.0, 0.0);
        assert_eq!(constraint_residual(&q, &Vector3::new(0.0, 1.0, 0.0)), -1.0);
        assert_eq!(constraint_residual(&q, &Vector3::new(1.0, 0.0, 0.0)), 0.0);
        let q = GeneralCoordinates::new(1.0, 2.0, 0.7);
        let rate = kinematics(&q, &BodyVelocity::new(1.3, -0.4));
        assert!(constraint_residual(&q, &rate).abs() <= 1e-15);
    }

    #[test]
    fn reduced_inertia_examples() {
        assert_eq!(
            reduced_inertia(&params(2.0, 0.2, 0.0)),
            Matrix2::new(2.0, 0.0, 0.0, 0.2)
        );
        assert_abs_diff_eq!(
            reduced_inertia(&params(2.0, 0.2, 0.1)),
            Matrix2::new(2.0, 0.0, 0.0, 0.22),
            epsilon = 1e-15
        );
    }

    #[test]
    fn coriolis_examples() {
        let p0 = params(2.0, 0.2, 0.0);
        assert_eq!(coriolis(&p0, 3.7), Matrix2::zeros());
        let p = params(2.0, 0.2, 0.1);
        assert_abs_diff_eq!(
            coriolis(&p, 1.0),
            Matrix2::new(0.0, -0.2, 0.2, 0.0),
            epsilon = 1e-15
        );
        let c = coriolis(&p, -2.3);
        assert_eq!(c + c.transpose(), Matrix2::zeros());
    }

    #[test]
    fn friction_examples() {
        let p = params(2.0, 0.2, 0.1);
        assert_eq!(friction(&p, &BodyVelocity::new(0.0, 0.0)), Vector2::zeros());
        assert_abs_diff_eq!(
            friction(&p, &BodyVelocity::new(1.0, 1.0)),
            Vector2::new(0.3, 0.06),
            epsilon = 1e-15
        );
        // The quadratic term does not flip sign with v.
        assert_abs_diff_eq!(
            friction(&p, &BodyVelocity::new(-1.0, 0.0)),
            Vector2::new(-0.1, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn body_accel_examples() {
        let p = params(2.0, 0.2, 0.0);
        let zero = body_accel(&p, &BodyVelocity::default(), &TransformedTorque::default());
        assert_eq!(zero, Vector2::zeros());
        let p = VehicleParams {
            friction: FrictionCoeffs::ZERO,
            ..p
        };
        let a = body_accel(
            &p,
            &BodyVelocity::default(),
            &TransformedTorque::new(2.0, 0.2),
        );
        assert_abs_diff_eq!(a, Vector2::new(1.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn wheel_torque_examples() {
        let p = VehicleParams::default();
        let w = wheel_torques(&p, &TransformedTorque::new(1.0, 0.0));
        assert_abs_diff_eq!(w.tau_right, 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(w.tau_left, 0.025, epsilon = 1e-15);
        let w = wheel_torques(&p, &TransformedTorque::new(0.0, 1.0));
        assert_abs_diff_eq!(w.tau_right, 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.tau_left, -1.0 / 6.0, epsilon = 1e-12);
        assert_eq!(
            wheel_torques(&p, &TransformedTorque::default()),
            WheelTorque::default()
        );
    }

    #[test]
    fn full_inertia_examples() {
        let p = params(2.0, 0.2, 0.0);
        assert_eq!(
            full_inertia(&p, 1.1),
            Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 0.2))
        );
        let p = params(2.0, 0.2, 0.1);
        let m = full_inertia(&p, 0.0);
        assert_abs_diff_eq!(m[(0, 2)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 2)], 0.2, epsilon = 1e-15);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn saturation_flags_clipping() {
        let (t, hit) = TransformedTorque::new(60.0, -1.0).saturate(50.0);
        assert!(hit);
        assert_eq!(t, TransformedTorque::new(50.0, -1.0));
        let (_, hit) = TransformedTorque::new(10.0, -10.0).saturate(50.0);
        assert!(!hit);
    }

    #[test]
    fn rejects_bad_params() {
        let p = VehicleParams {
            wheel_radius: 0.0,
            half_track: -1.0,
            com_offset: -0.1,
            ..VehicleParams::default()
        };
        let v = p.validate();
        let fields: Vec<_> = v.iter().map(|x| x.field.as_str()).collect();
        assert!(fields.contains(&"vehicle.wheel_radius"));
        assert!(fields.contains(&"vehicle.half_track"));
        assert!(fields.contains(&"vehicle.com_offset"));
        assert!(VehicleParams::default().validate().is_empty());
    }
}
