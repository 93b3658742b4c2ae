//! Laplacian spectra of the preset topologies and pure weight consensus
//! `Ẇ = −β L W` on a ring.

use cdl_fleet::engine::rk4_step;
use cdl_fleet::graph::FleetGraph;

fn main() {
    for (name, g) in [
        ("ring", FleetGraph::cycle(4, 1.0)),
        ("path", FleetGraph::path(4, 1.0)),
        ("complete", FleetGraph::complete(4, 1.0)),
    ] {
        let spectrum: Vec<String> = g
            .laplacian_spectrum()
            .iter()
            .map(|l| format!("{l:.3}"))
            .collect();
        println!(
            "{name:>8}: spectrum [{}], lambda_2 = {:.3}",
            spectrum.join(", "),
            g.algebraic_connectivity()
        );
    }

    let g = FleetGraph::cycle(4, 1.0);
    let l = g.laplacian();
    let beta = 10.0;
    let mut w = vec![1.0, -2.0, 0.5, 4.0];
    let mean = w.iter().sum::<f64>() / 4.0;
    let dt = 1e-3;
    for k in 0..=500 {
        if k % 100 == 0 {
            let spread = w.iter().cloned().fold(f64::MIN, f64::max)
                - w.iter().cloned().fold(f64::MAX, f64::min);
            println!(
                "t = {:.1}  spread {:.3e}  mean {:.6}",
                k as f64 * dt,
                spread,
                w.iter().sum::<f64>() / 4.0
            );
        }
        w = rk4_step(
            |_, y, d| {
                for i in 0..4 {
                    d[i] = -beta * (0..4).map(|j| l[(i, j)] * y[j]).sum::<f64>();
                }
            },
            &w,
            k as f64 * dt,
            dt,
        );
    }
    println!("initial mean {mean:.6} is preserved");
}
