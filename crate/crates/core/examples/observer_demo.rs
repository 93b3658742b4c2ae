//! High-gain velocity observer on a single vehicle driven by a fixed torque.
//!
//! Only the pose is fed to the observer. The printed errors show the fast
//! transient followed by a small lag proportional to `δ`.

use cdl_fleet::engine::rk4_step;
use cdl_fleet::model::{
    body_accel, kinematics, BodyVelocity, GeneralCoordinates, TransformedTorque, VehicleParams,
};
use cdl_fleet::observer::{estimate, observer_rates, rotating_frame, ObserverGains, ObserverState};

fn main() {
    let params = VehicleParams::default();
    let tau = TransformedTorque::new(1.0, 0.15);
    for delta in [0.02, 0.01, 0.005] {
        let gains = ObserverGains {
            l1: 1.0,
            l2: 1.0,
            delta,
        };
        // state: x, y, θ, v, ω, θ̂, ω̂, p̂x, v̂
        let q0 = GeneralCoordinates::new(0.5, -0.2, 0.3);
        let mut y = vec![q0.x, q0.y, q0.theta, 0.4, 0.2];
        y.extend_from_slice(ObserverState::initialized_from(&q0).to_vector().as_slice());
        let rate = |_t: f64, s: &[f64], d: &mut [f64]| {
            let q = GeneralCoordinates::new(s[0], s[1], s[2]);
            let u = BodyVelocity::new(s[3], s[4]);
            d[..3].copy_from_slice(kinematics(&q, &u).as_slice());
            d[3..5].copy_from_slice(body_accel(&params, &u, &tau).as_slice());
            let obs = ObserverState::from_slice(&s[5..9]);
            d[5..9].copy_from_slice(
                observer_rates(&obs, &gains, q.theta, rotating_frame(&q)).as_slice(),
            );
        };
        let dt = delta / 20.0;
        println!("delta = {delta}");
        let mut t = 0.0;
        for checkpoint in [0.05, 0.2, 1.0, 5.0] {
            while t < checkpoint - 1e-12 {
                y = rk4_step(rate, &y, t, dt);
                t += dt;
            }
            let u_hat = estimate(&ObserverState::from_slice(&y[5..9]));
            println!(
                "  t = {checkpoint:>4}  |v - v^| = {:.2e}  |w - w^| = {:.2e}",
                (y[3] - u_hat.v).abs(),
                (y[4] - u_hat.omega).abs()
            );
        }
    }
}
