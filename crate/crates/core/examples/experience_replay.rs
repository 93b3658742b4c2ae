//! Reuse learned weights on a different reference, and compare with no knowledge.
//!
//! Vehicle 1 takes over the third ellipse, vehicle 2 the first and vehicle 3
//! the second. The controller keeps the consolidated weights fixed.

use cdl_fleet::checks::consolidate_all;
use cdl_fleet::config::{FleetConfig, RunMode};
use cdl_fleet::engine::metrics::metric_tracking;
use cdl_fleet::engine::{run_experience, run_learning};
use cdl_fleet::rbf::WeightMatrix;

fn main() -> Result<(), cdl_fleet::Error> {
    let cfg = FleetConfig::default();
    let learning = run_learning(&cfg.scenario(RunMode::Learning)?)?;
    let [t_a, t_b] = cfg.sim.consolidation_window();
    let w_bar = consolidate_all(&learning, t_a, t_b)?;

    let scenario = cfg.scenario(RunMode::Experience)?;
    let assignment = [2, 0, 1, 3];
    let learned = run_experience(&scenario, &w_bar, &assignment)?;
    let zeros = vec![WeightMatrix::zeros(scenario.lattice.len()); scenario.agents()];
    let blank = run_experience(&scenario, &zeros, &assignment)?;

    let window = learned.t_end() - 5.0;
    let a = metric_tracking(&learned, window);
    let b = metric_tracking(&blank, window);
    println!("agent  reference  rms|e_p| learned  rms|e_p| zero weights");
    for i in 0..scenario.agents() {
        println!(
            "{:>5}  {:>9}  {:>16.4}  {:>21.4}",
            i + 1,
            assignment[i] + 1,
            a[i].rms_position,
            b[i].rms_position
        );
    }
    Ok(())
}
