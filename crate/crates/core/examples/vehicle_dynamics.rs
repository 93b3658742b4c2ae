//! Vehicle model: wheel torque mapping and a coasting run without friction,
//! where kinetic energy stays constant because the Coriolis matrix is skew.

use cdl_fleet::engine::Rk4;
use cdl_fleet::model::{
    body_accel, constraint_residual, kinematics, reduced_inertia, transformed_torque,
    wheel_torques, BodyVelocity, FrictionCoeffs, GeneralCoordinates, TransformedTorque,
    VehicleParams, WheelTorque,
};

fn main() {
    let params = VehicleParams::default();
    let wheels = WheelTorque {
        tau_right: 0.2,
        tau_left: -0.1,
    };
    let body = transformed_torque(&params, &wheels);
    println!(
        "wheel torques ({}, {}) -> tau_v = {:.3}, tau_w = {:.3}",
        wheels.tau_right, wheels.tau_left, body.tau_v, body.tau_w
    );
    let back = wheel_torques(&params, &body);
    println!("and back: ({:.3}, {:.3})", back.tau_right, back.tau_left);

    let coasting = VehicleParams {
        friction: FrictionCoeffs::ZERO,
        ..params
    };
    let m_bar = reduced_inertia(&coasting);
    let energy = |u: &BodyVelocity| 0.5 * u.to_vector().dot(&(m_bar * u.to_vector()));
    let mut y = vec![0.0, 0.0, 0.0, 1.2, 0.8];
    let e0 = energy(&BodyVelocity::new(y[3], y[4]));
    let dt = 1e-3;
    let mut rk = Rk4::new(5);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        rk.step(
            |_, s, d| {
                let q = GeneralCoordinates::new(s[0], s[1], s[2]);
                let u = BodyVelocity::new(s[3], s[4]);
                let qd = kinematics(&q, &u);
                worst = worst.max(constraint_residual(&q, &qd).abs());
                d[..3].copy_from_slice(qd.as_slice());
                d[3..].copy_from_slice(
                    body_accel(&coasting, &u, &TransformedTorque::default()).as_slice(),
                );
            },
            &mut y,
            k as f64 * dt,
            dt,
        );
    }
    let e1 = energy(&BodyVelocity::new(y[3], y[4]));
    println!("coasting 10 s: energy {e0:.9} -> {e1:.9}, max no-slip residual {worst:.1e}");
    println!(
        "final pose ({:.3}, {:.3}, {:.3}), velocity ({:.3}, {:.3})",
        y[0], y[1], y[2], y[3], y[4]
    );
}
