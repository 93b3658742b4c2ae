//! Recurrent planar reference trajectories.
//!
//! A reference is a periodic curve `(x_r(t), y_r(t))`. Heading and body
//! velocities follow from its derivatives:
//!
//! ```text
//! θ_r = atan2(ẏ, ẋ),   v_r = ‖(ẋ, ẏ)‖,   ω_r = (ẋ ÿ − ẍ ẏ) / v_r²
//! ```
//!
//! and `v̇_r`, `ω̇_r` are obtained analytically from the third derivative.

use std::f64::consts::TAU;

use nalgebra::Vector2;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::control::ReferenceSample;
use crate::error::Violation;

/// Which coordinate carries the sine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// `x = a_x sin(ft)`, `y = a_y cos(ft)`.
    SinFirst,
    /// `x = a_x cos(ft)`, `y = a_y sin(ft)`.
    CosFirst,
}

fn default_freq() -> f64 {
    1.0
}

/// Serializable description of one reference trajectory.
///
/// Signs of `amp_x`/`amp_y` select the direction of travel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceSpec {
    LissajousEllipse {
        amp_x: f64,
        amp_y: f64,
        phase: Phase,
        #[serde(default = "default_freq")]
        freq: f64,
    },
    /// One period of equally spaced samples, interpolated trigonometrically.
    CustomSamples {
        period: f64,
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl ReferenceSpec {
    pub fn ellipse(amp_x: f64, amp_y: f64, phase: Phase) -> Self {
        ReferenceSpec::LissajousEllipse {
            amp_x,
            amp_y,
            phase,
            freq: 1.0,
        }
    }

    /// The four ellipses of the reference fleet scenario.
    pub fn fleet_defaults() -> Vec<Self> {
        vec![
            Self::ellipse(-1.0, 2.0, Phase::SinFirst),
            Self::ellipse(2.0, 1.0, Phase::CosFirst),
            Self::ellipse(-2.0, 3.0, Phase::SinFirst),
            Self::ellipse(3.0, 2.0, Phase::CosFirst),
        ]
    }

    /// Structural checks that do not need the compiled trajectory.
    pub fn validate(&self, field: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            ReferenceSpec::LissajousEllipse {
                amp_x, amp_y, freq, ..
            } => {
                if !(amp_x.is_finite() && *amp_x != 0.0) {
                    out.push(Violation::new(
                        format!("{field}.amp_x"),
                        "must be finite and nonzero",
                    ));
                }
                if !(amp_y.is_finite() && *amp_y != 0.0) {
                    out.push(Violation::new(
                        format!("{field}.amp_y"),
                        "must be finite and nonzero",
                    ));
                }
                if !(freq.is_finite() && *freq > 0.0) {
                    out.push(Violation::new(
                        format!("{field}.freq"),
                        "must be finite and > 0",
                    ));
                }
            }
            ReferenceSpec::CustomSamples { period, x, y } => {
                if !(period.is_finite() && *period > 0.0) {
                    out.push(Violation::new(
                        format!("{field}.period"),
                        "must be finite and > 0",
                    ));
                }
                if x.len() != y.len() {
                    out.push(Violation::new(
                        field.to_string(),
                        format!("x has {} samples but y has {}", x.len(), y.len()),
                    ));
                }
                if x.len() < 4 {
                    out.push(Violation::new(
                        format!("{field}.x"),
                        "need at least 4 samples per period",
                    ));
                }
                if x.iter().chain(y).any(|v| !v.is_finite()) {
                    out.push(Violation::new(field.to_string(), "samples must be finite"));
                }
            }
        }
        out
    }

    /// Compile into an evaluable trajectory. Call [`ReferenceSpec::validate`] first.
    pub fn compile(&self) -> Reference {
        match *self {
            ReferenceSpec::LissajousEllipse {
                amp_x,
                amp_y,
                phase,
                freq,
            } => Reference::Ellipse {
                amp_x,
                amp_y,
                phase,
                freq,
            },
            ReferenceSpec::CustomSamples {
                period,
                ref x,
                ref y,
            } => Reference::Fourier {
                period,
                x: FourierSeries::fit(x),
                y: FourierSeries::fit(y),
            },
        }
    }
}

/// Real trigonometric series `a₀ + Σ a_m cos(mωt) + b_m sin(mωt)` in units of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSeries {
    /// Trigonometric interpolant of equally spaced samples over one period.
    pub fn fit(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let nf = n as f64;
        let half = n / 2;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        cos[0] = buf[0].re / nf;
        for m in 1..=half {
            if 2 * m == n {
                // Nyquist term: keep the cosine only.
                cos[m] = buf[m].re / nf;
            } else {
                cos[m] = 2.0 * buf[m].re / nf;
                sin[m] = -2.0 * buf[m].im / nf;
            }
        }
        Self { cos, sin }
    }

    /// Value and first three derivatives at phase `2π t / period`.
    fn derivatives(&self, t: f64, period: f64) -> [f64; 4] {
        let w = TAU / period;
        let mut d = [self.cos[0], 0.0, 0.0, 0.0];
        for m in 1..self.cos.len() {
            let k = m as f64 * w;
            let (s, c) = (k * t).sin_cos();
            let (a, b) = (self.cos[m], self.sin[m]);
            d[0] += a * c + b * s;
            d[1] += k * (-a * s + b * c);
            d[2] += k * k * (-a * c - b * s);
            d[3] += k * k * k * (a * s - b * c);
        }
        d
    }
}

/// A compiled, evaluable reference.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Ellipse {
        amp_x: f64,
        amp_y: f64,
        phase: Phase,
        freq: f64,
    },
    Fourier {
        period: f64,
        x: FourierSeries,
        y: FourierSeries,
    },
}

impl Reference {
    pub fn period(&self) -> f64 {
        match self {
            Reference::Ellipse { freq, .. } => TAU / freq,
            Reference::Fourier { period, .. } => *period,
        }
    }

    /// Position and its first three time derivatives.
    pub fn planar_derivatives(&self, t: f64) -> [Vector2<f64>; 4] {
        match *self {
            Reference::Ellipse {
                amp_x,
                amp_y,
                phase,
                freq,
            } => {
                let (s, c) = (freq * t).sin_cos();
                let f = freq;
                // d^k/dt^k of (sin, cos)
                let sin_d = [s, f * c, -f * f * s, -f * f * f * c];
                let cos_d = [c, -f * s, -f * f * c, f * f * f * s];
                let (xs, ys) = match phase {
                    Phase::SinFirst => (sin_d, cos_d),
                    Phase::CosFirst => (cos_d, sin_d),
                };
                std::array::from_fn(|k| Vector2::new(amp_x * xs[k], amp_y * ys[k]))
            }
            Reference::Fourier {
                period,
                ref x,
                ref y,
            } => {
                let dx = x.derivatives(t, period);
                let dy = y.derivatives(t, period);
                std::array::from_fn(|k| Vector2::new(dx[k], dy[k]))
            }
        }
    }

    /// Heading, body velocities and their derivatives at time `t`.
    pub fn eval(&self, t: f64) -> ReferenceSample {
        let [p, d1, d2, d3] = self.planar_derivatives(t);
        let v2 = d1.norm_squared();
        let v = v2.sqrt();
        let omega = (d1[0] * d2[1] - d2[0] * d1[1]) / v2;
        let vdot = d1.dot(&d2) / v;
        let omegadot = (d1[0] * d3[1] - d3[0] * d1[1]) / v2 - 2.0 * omega * vdot / v;
        ReferenceSample {
            x_r: p[0],
            y_r: p[1],
            theta_r: crate::control::wrap_angle(d1[1].atan2(d1[0])),
            v_r: v,
            omega_r: omega,
            vdot_r: vdot,
            omegadot_r: omegadot,
        }
    }

    /// Ranges of `v_r` and `ω_r` over one period, sampled densely.
    pub fn velocity_envelope(&self) -> VelocityEnvelope {
        const SAMPLES: usize = 4096;
        let period = self.period();
        let mut env = VelocityEnvelope {
            v_min: f64::INFINITY,
            v_max: f64::NEG_INFINITY,
            omega_min: f64::INFINITY,
            omega_max: f64::NEG_INFINITY,
        };
        for k in 0..SAMPLES {
            let t = period * k as f64 / SAMPLES as f64;
            let speed = self.planar_derivatives(t)[1].norm();
            env.v_min = env.v_min.min(speed);
            env.v_max = env.v_max.max(speed);
            if speed > 0.0 {
                let s = self.eval(t);
                env.omega_min = env.omega_min.min(s.omega_r);
                env.omega_max = env.omega_max.max(s.omega_r);
            }
        }
        env
    }
}

/// Sampled bounds of the reference body velocities over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEnvelope {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

/// Minimum reference speed accepted; below this `θ_r` and `ω_r` are ill-defined.
pub const MIN_REFERENCE_SPEED: f64 = 1e-6;

/// Evaluate a reference description at time `t`.
pub fn reference_eval(spec: &ReferenceSpec, t: f64) -> ReferenceSample {
    spec.compile().eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn first_fleet_reference_at_zero() {
        let r = ReferenceSpec::fleet_defaults()[0].compile().eval(0.0);
        assert_abs_diff_eq!(r.x_r, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y_r, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v_r, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.theta_r, PI, epsilon = 1e-15);
    }

    #[test]
    fn first_fleet_reference_turn_rate_closed_form() {
        // ω_r = 2 / (1 + 3 sin² t) ∈ [0.5, 2]
        let r = ReferenceSpec::fleet_defaults()[0].compile();
        for k in 0..200 {
            let t = 0.0371 * k as f64;
            let s = t.sin();
            assert_abs_diff_eq!(
                r.eval(t).omega_r,
                2.0 / (1.0 + 3.0 * s * s),
                epsilon = 1e-12
            );
        }
        let env = r.velocity_envelope();
        assert_abs_diff_eq!(env.omega_min, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(env.omega_max, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(env.v_min, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(env.v_max, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn unit_circle_has_constant_velocities() {
        let r = ReferenceSpec::ellipse(1.0, 1.0, Phase::CosFirst).compile();
        for t in [0.0, 0.3, 1.7, 4.0] {
            let s = r.eval(t);
            assert_abs_diff_eq!(s.v_r, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.omega_r, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.vdot_r, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.omegadot_r, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn velocity_rates_match_central_differences() {
        let h = 1e-4;
        for spec in ReferenceSpec::fleet_defaults() {
            let r = spec.compile();
            for k in 0..50 {
                let t = 0.13 * k as f64;
                let (a, b, c) = (r.eval(t - h), r.eval(t), r.eval(t + h));
                assert_abs_diff_eq!(b.vdot_r, (c.v_r - a.v_r) / (2.0 * h), epsilon = 1e-6);
                assert_abs_diff_eq!(
                    b.omegadot_r,
                    (c.omega_r - a.omega_r) / (2.0 * h),
                    epsilon = 1e-6
                );
                let dth = crate::control::wrap_angle(c.theta_r - a.theta_r) / (2.0 * h);
                assert_abs_diff_eq!(b.omega_r, dth, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn samples_reproduce_ellipse() {
        let n = 64;
        let period = TAU;
        let xs: Vec<f64> = (0..n)
            .map(|k| 2.0 * (TAU * k as f64 / n as f64).cos())
            .collect();
        let ys: Vec<f64> = (0..n).map(|k| (TAU * k as f64 / n as f64).sin()).collect();
        let custom = ReferenceSpec::CustomSamples {
            period,
            x: xs,
            y: ys,
        };
        assert!(custom.validate("r").is_empty());
        let custom = custom.compile();
        let exact = ReferenceSpec::ellipse(2.0, 1.0, Phase::CosFirst).compile();
        for t in [0.0, 0.5, 2.2, 5.9] {
            let (a, b) = (custom.eval(t), exact.eval(t));
            assert_abs_diff_eq!(a.x_r, b.x_r, epsilon = 1e-12);
            assert_abs_diff_eq!(a.theta_r, b.theta_r, epsilon = 1e-12);
            assert_abs_diff_eq!(a.omega_r, b.omega_r, epsilon = 1e-11);
            assert_abs_diff_eq!(a.omegadot_r, b.omegadot_r, epsilon = 1e-10);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(!ReferenceSpec::ellipse(0.0, 1.0, Phase::SinFirst)
            .validate("r")
            .is_empty());
        let bad = ReferenceSpec::CustomSamples {
            period: 1.0,
            x: vec![0.0; 3],
            y: vec![0.0; 4],
        };
        assert_eq!(bad.validate("r").len(), 2);
    }
}
