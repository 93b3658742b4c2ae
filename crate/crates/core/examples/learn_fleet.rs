//! Cooperative learning on the four-vehicle ring scenario.
//!
//! ```text
//! cargo run --release --example learn_fleet
//! ```

use cdl_fleet::checks::consolidate_all;
use cdl_fleet::config::{FleetConfig, RunMode};
use cdl_fleet::engine::metrics::{
    metric_consensus, metric_estimation_error, metric_tracking, observer_error_max,
};
use cdl_fleet::engine::run_learning;

fn main() -> Result<(), cdl_fleet::Error> {
    let cfg = FleetConfig::default();
    let scenario = cfg.scenario(RunMode::Learning)?;
    let start = std::time::Instant::now();
    let log = run_learning(&scenario)?;
    println!(
        "simulated {} s for {} agents in {:.2?}",
        log.t_end(),
        log.agents,
        start.elapsed()
    );

    let t_end = log.t_end();
    let tracking = metric_tracking(&log, t_end - 5.0);
    let observer = observer_error_max(&log, 0.5);
    let estimation = metric_estimation_error(&log, t_end - 10.0);
    println!("agent  max|e_p| (m)  max|e_th| (rad)  max|v-v^|  max|w-w^|  est rel");
    for i in 0..log.agents {
        println!(
            "{:>5}  {:>12.4}  {:>15.4}  {:>9.4}  {:>9.4}  {:>7.3}",
            i + 1,
            tracking[i].max_position,
            tracking[i].max_heading,
            observer[i][0],
            observer[i][1],
            estimation[i].relative()
        );
    }

    let [t_a, t_b] = cfg.sim.consolidation_window();
    let w_bar = consolidate_all(&log, t_a, t_b)?;
    println!("consensus diameter at T: {:.5}", metric_consensus(&log));
    for (i, w) in w_bar.iter().enumerate() {
        println!("agent {} ||W_bar||_F = {:.4}", i + 1, w.frobenius());
    }
    Ok(())
}
