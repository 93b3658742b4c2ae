//! Closed-loop invariants of the fleet simulator.

use nalgebra::DMatrix;

use cdl_fleet::checks::consolidate_all;
use cdl_fleet::config::{FleetConfig, GraphConfig, RunMode};
use cdl_fleet::engine::metrics::{estimation_error_along, metric_tracking};
use cdl_fleet::engine::reference::{Phase as EllipsePhase, ReferenceSpec};
use cdl_fleet::engine::{run_experience, run_learning, FleetDynamics, Phase, Scenario};
use cdl_fleet::model::{constraint_residual, kinematics, unknown_dynamics, BodyVelocity};
use cdl_fleet::rbf::WeightMatrix;
use cdl_fleet::Error;

fn scenario_with(t_end: f64, edit: impl FnOnce(&mut FleetConfig)) -> Scenario {
    let mut cfg = FleetConfig::default();
    cfg.sim.t_end = t_end;
    edit(&mut cfg);
    cfg.scenario(RunMode::Learning).unwrap()
}

fn csv_bytes(log: &cdl_fleet::engine::RunLog) -> Vec<u8> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn runs_are_bit_identical() {
    let sc = scenario_with(3.0, |_| {});
    let a = run_learning(&sc).unwrap();
    let b = run_learning(&sc).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
}

/// A deterministic, non-trivial fleet state: scattered poses, velocities,
/// observer states and weights.
fn scrambled_state(dynamics: &FleetDynamics) -> Vec<f64> {
    let mut y = dynamics.initial_state();
    for (k, v) in y.iter_mut().enumerate() {
        *v += 0.5 * ((k as f64) * 1.618).sin() + 0.1 * ((k * k) as f64 * 0.37).cos();
    }
    y
}

#[test]
fn agent_rates_are_order_independent() {
    let sc = scenario_with(1.0, |_| {});
    let dynamics = FleetDynamics::new(&sc, vec![0, 1, 2, 3], Phase::Learning);
    let y = scrambled_state(&dynamics);
    let mut reference = vec![0.0; y.len()];
    dynamics.rate(0.7, &y, &mut reference);
    for order in [[3, 2, 1, 0], [2, 0, 3, 1], [1, 3, 0, 2]] {
        // Stale contents in the output buffer must not leak into any agent's rate.
        let mut out = vec![f64::NAN; y.len()];
        dynamics.rate_in_order(0.7, &y, &mut out, &order);
        assert_eq!(
            out.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            reference.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            "order {order:?}"
        );
    }
}

#[test]
fn agent_rate_reads_only_its_own_block_and_neighbour_weights() {
    let sc = scenario_with(1.0, |_| {});
    let dynamics = FleetDynamics::new(&sc, vec![0, 1, 2, 3], Phase::Learning);
    let y = scrambled_state(&dynamics);
    let stride = dynamics.stride();
    let mut base = vec![0.0; y.len()];
    dynamics.agent_rate(&y, 0.3, 0, &mut base);
    // Agent 3 (index 2) is not adjacent to agent 1 on the ring.
    let mut perturbed = y.clone();
    for v in &mut perturbed[2 * stride..3 * stride] {
        *v += 1.0;
    }
    let mut out = vec![0.0; y.len()];
    dynamics.agent_rate(&perturbed, 0.3, 0, &mut out);
    assert_eq!(base[..stride], out[..stride]);
}

#[test]
fn experience_phase_freezes_weights() {
    let sc = scenario_with(1.0, |_| {});
    let ws: Vec<WeightMatrix> = (0..4)
        .map(|i| WeightMatrix(nalgebra::MatrixXx2::from_element(25, 0.1 * i as f64)))
        .collect();
    let dynamics = FleetDynamics::new(&sc, vec![2, 0, 1, 3], Phase::Experience(ws.clone()));
    let y = scrambled_state(&dynamics);
    let mut out = vec![1.0; y.len()];
    dynamics.rate(0.2, &y, &mut out);
    let stride = dynamics.stride();
    for i in 0..4 {
        assert!(out[i * stride + 9..(i + 1) * stride]
            .iter()
            .all(|&v| v == 0.0));
    }
    let log = run_experience(&sc, &ws, &[2, 0, 1, 3]).unwrap();
    for snap in &log.snapshots {
        assert_eq!(snap.weights, ws);
    }
}

#[test]
fn logged_states_satisfy_no_slip() {
    let sc = scenario_with(5.0, |_| {});
    let log = run_learning(&sc).unwrap();
    for r in &log.records {
        let qd = kinematics(&r.q, &r.u);
        assert!(
            constraint_residual(&r.q, &qd).abs() < 1e-13,
            "t {} agent {}",
            r.t,
            r.agent
        );
    }
    // The integrated positions respect the constraint too: the lateral speed
    // from central differences of the logged path shrinks as O(h²).
    let lateral_max = |spacing: usize| {
        let mut m: f64 = 0.0;
        for i in 0..log.agents {
            let recs: Vec<_> = log.agent_records(i).collect();
            for k in spacing..recs.len() - spacing {
                let (a, c, b) = (recs[k - spacing], recs[k], recs[k + spacing]);
                let h = b.t - a.t;
                let xd = (b.q.x - a.q.x) / h;
                let yd = (b.q.y - a.q.y) / h;
                m = m.max((xd * c.q.theta.sin() - yd * c.q.theta.cos()).abs());
            }
        }
        m
    };
    let (fine, coarse) = (lateral_max(1), lateral_max(2));
    assert!(fine < 5e-3, "{fine}");
    assert!((3.0..5.0).contains(&(coarse / fine)), "{coarse} / {fine}");
}

#[test]
fn zero_duration_run_logs_only_the_initial_state() {
    let sc = scenario_with(0.0, |_| {});
    let log = run_learning(&sc).unwrap();
    assert_eq!(log.records.len(), 4);
    assert!(log.records.iter().all(|r| r.t == 0.0));
    assert_eq!(log.snapshots.len(), 1);
    assert!(log
        .final_weights()
        .iter()
        .all(|w| w.0.iter().all(|&v| v == 0.0)));
    // With zero weights the estimation error is H itself.
    for r in &log.records {
        assert_eq!(r.est_err, r.h);
    }
}

#[test]
fn logging_grid() {
    let sc = scenario_with(1.0, |_| {});
    let log = run_learning(&sc).unwrap();
    // 0.00, 0.01, ..., 1.00 for each agent.
    assert_eq!(log.records.len(), 101 * 4);
    assert_eq!(log.snapshots.len(), 11);
    assert!((log.t_end() - 1.0).abs() < 1e-12);
}

/// A lone agent without leakage or neighbours learns along its own path only.
#[test]
fn single_agent_learns_locally() {
    let sc = scenario_with(25.0, |c| {
        c.references = vec![ReferenceSpec::ellipse(-2.0, 3.0, EllipsePhase::SinFirst)];
        c.graph = GraphConfig {
            preset: None,
            adjacency: Some(vec![vec![0.0]]),
            weight: 1.0,
        };
        c.gains.beta = 0.0;
        c.gains.gamma_small = 0.0;
    });
    let log = run_learning(&sc).unwrap();
    let w = consolidate_all(&log, 15.0, 25.0).unwrap().remove(0);
    let own: Vec<_> = log.agent_window(0, 15.0).map(|r| r.u).collect();
    // A slower loop in a different part of the velocity plane.
    let other = ReferenceSpec::ellipse(-1.0, 2.0, EllipsePhase::SinFirst).compile();
    let away: Vec<_> = (0..2000)
        .map(|k| {
            let s = other.eval(k as f64 * 0.005);
            BodyVelocity::new(s.v_r, s.omega_r)
        })
        .collect();
    let e_own = estimation_error_along(&sc.vehicle, &sc.lattice, &w, &own).relative();
    let e_away = estimation_error_along(&sc.vehicle, &sc.lattice, &w, &away).relative();
    assert!(e_own < 0.5, "own {e_own}");
    assert!(e_away > e_own, "own {e_own}, away {e_away}");
}

/// The estimation metric agrees with an independent least-squares residual.
#[test]
fn estimation_metric_matches_least_squares_oracle() {
    let sc = scenario_with(8.0, |_| {});
    let log = run_learning(&sc).unwrap();
    let traj: Vec<_> = log.agent_window(2, 2.0).map(|r| r.u).collect();
    let nodes = sc.lattice.len();
    let phi = DMatrix::from_fn(traj.len(), nodes, |k, j| {
        sc.lattice.eval_basis(traj[k].to_vector())[j]
    });
    let target = DMatrix::from_fn(traj.len(), 2, |k, c| {
        unknown_dynamics(&sc.vehicle, &traj[k])[c]
    });
    // Ridge normal equations solved by Cholesky.
    let gram = phi.transpose() * &phi + DMatrix::identity(nodes, nodes) * 1e-6;
    let rhs = phi.transpose() * &target;
    let w = gram.cholesky().unwrap().solve(&rhs);
    let residual = &phi * &w - &target;
    let oracle = (residual.norm_squared() / traj.len() as f64).sqrt()
        / (target.norm_squared() / traj.len() as f64).sqrt();
    let weights = WeightMatrix(nalgebra::MatrixXx2::from_column_slice(w.as_slice()));
    let stats = estimation_error_along(&sc.vehicle, &sc.lattice, &weights, &traj);
    assert!(
        (stats.relative() - oracle).abs() < 1e-9,
        "{} vs {oracle}",
        stats.relative()
    );
    // The lattice can represent H well along a real trajectory.
    assert!(oracle < 0.05, "{oracle}");
}

#[test]
fn experience_with_own_references_matches_learning_accuracy() {
    let sc = scenario_with(25.0, |_| {});
    let learned = run_learning(&sc).unwrap();
    let w_bar = consolidate_all(&learned, 15.0, 25.0).unwrap();
    let replay = run_experience(&sc, &w_bar, &[0, 1, 2, 3]).unwrap();
    let a = metric_tracking(&learned, 20.0);
    let b = metric_tracking(&replay, 20.0);
    for i in 0..4 {
        // Within 10 % of the learning run's steady-state error.
        assert!(
            b[i].max_position <= 1.1 * a[i].max_position,
            "agent {}: replay {} vs learning {}",
            i + 1,
            b[i].max_position,
            a[i].max_position
        );
    }
}

#[test]
fn torque_bound_is_respected_and_flagged() {
    let sc = scenario_with(3.0, |c| c.gains.tau_max = 0.5);
    let log = run_learning(&sc).unwrap();
    assert!(log.records.iter().any(|r| r.saturated));
    for r in &log.records {
        assert!(r.tau.tau_v.abs() <= 0.5 && r.tau.tau_w.abs() <= 0.5);
    }
}

#[test]
fn unstable_integration_reports_divergence() {
    // Validation forbids this pairing of dt and δ; bypass it to exercise the runtime guard.
    let mut sc = scenario_with(5.0, |_| {});
    sc.observer.delta = 1e-5;
    match run_learning(&sc) {
        Err(Error::Divergence { agent, step, .. }) => {
            assert!((1..=4).contains(&agent));
            assert!(step > 0);
        }
        other => panic!(
            "expected divergence, got {:?}",
            other.map(|l| l.records.len())
        ),
    }
}
