//! Reference generators: velocity envelopes of the fleet ellipses and a
//! trajectory defined by samples.

use std::f64::consts::TAU;

use cdl_fleet::engine::reference::ReferenceSpec;

fn main() {
    for (i, spec) in ReferenceSpec::fleet_defaults().iter().enumerate() {
        let r = spec.compile();
        let env = r.velocity_envelope();
        let s0 = r.eval(0.0);
        println!(
            "reference {}: start ({:.2}, {:.2}) heading {:.3}; v_r in [{:.3}, {:.3}], w_r in [{:.3}, {:.3}]",
            i + 1,
            s0.x_r,
            s0.y_r,
            s0.theta_r,
            env.v_min,
            env.v_max,
            env.omega_min,
            env.omega_max
        );
    }

    // A rounded square traced in 8 s, given as 32 samples.
    let n = 32;
    let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            let (s, c) = a.sin_cos();
            (
                c.signum() * c.abs().powf(0.6),
                s.signum() * s.abs().powf(0.6),
            )
        })
        .unzip();
    let spec = ReferenceSpec::CustomSamples { period: 8.0, x, y };
    assert!(spec.validate("custom").is_empty());
    let r = spec.compile();
    let env = r.velocity_envelope();
    println!(
        "sampled reference: v_r in [{:.3}, {:.3}], w_r in [{:.3}, {:.3}]",
        env.v_min, env.v_max, env.omega_min, env.omega_max
    );
}
