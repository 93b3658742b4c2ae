//! Closed-loop fleet simulation for the learning and experience phases.

use nalgebra::{DVector, Matrix2, MatrixXx2, Vector2};

use super::integrator::Rk4;
use super::log::{FleetSnapshot, Record, RunLog};
use super::reference::Reference;
use crate::control::{
    adaptive_torque, experience_torque, lyapunov_value, tracking_error, virtual_velocity,
    virtual_velocity_rate, weight_update_rate, ControllerGains, ReferenceSample, TorqueCommand,
    TrackingError,
};
use crate::error::{Error, Result};
use crate::graph::FleetGraph;
use crate::model::{
    body_accel, kinematics, reduced_inertia, unknown_dynamics, BodyVelocity, GeneralCoordinates,
    VehicleParams,
};
use crate::observer::{estimate, observer_rates, rotating_frame, ObserverGains, ObserverState};
use crate::rbf::{predict, RbfLattice, WeightMatrix};

/// Any state component beyond this magnitude aborts the run.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Offsets into one agent's block of the fleet state vector.
const Q: usize = 0;
const U: usize = 3;
const OBS: usize = 5;
const W: usize = 9;

/// Integration and logging settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub t_end: f64,
    pub log_interval: f64,
    pub snapshot_interval: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 25.0,
            log_interval: 0.01,
            snapshot_interval: 0.1,
        }
    }
}

impl SimSettings {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn every(&self, interval: f64) -> usize {
        ((interval / self.dt).round() as usize).max(1)
    }
}

/// Everything a run needs, already validated and compiled.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub vehicle: VehicleParams,
    pub observer: ObserverGains,
    pub gains: ControllerGains,
    pub lattice: RbfLattice,
    pub graph: FleetGraph,
    pub references: Vec<Reference>,
    pub settings: SimSettings,
}

impl Scenario {
    pub fn agents(&self) -> usize {
        self.references.len()
    }
}

/// Which torque law drives the fleet.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    /// Adaptive weights with consensus coupling.
    Learning,
    /// Frozen per-agent weights, no communication.
    Experience(Vec<WeightMatrix>),
}

/// Everything the controller and plant compute for one agent at one instant.
#[derive(Debug, Clone)]
pub struct AgentEval {
    pub q: GeneralCoordinates,
    pub u: BodyVelocity,
    pub obs: ObserverState,
    pub u_hat: BodyVelocity,
    pub reference: ReferenceSample,
    pub error: TrackingError,
    pub u_c: Vector2<f64>,
    pub regressor: DVector<f64>,
    pub command: TorqueCommand,
}

/// The right-hand side of the coupled fleet ODE.
///
/// Agent `i` follows `references[assignment[i]]`. Every agent's rate depends
/// only on the state passed in, so agents can be evaluated in any order.
pub struct FleetDynamics<'a> {
    scenario: &'a Scenario,
    assignment: Vec<usize>,
    phase: Phase,
    m_bar: Matrix2<f64>,
    nodes: usize,
}

impl<'a> FleetDynamics<'a> {
    pub fn new(scenario: &'a Scenario, assignment: Vec<usize>, phase: Phase) -> Self {
        assert_eq!(assignment.len(), scenario.agents());
        Self {
            m_bar: reduced_inertia(&scenario.vehicle),
            nodes: scenario.lattice.len(),
            scenario,
            assignment,
            phase,
        }
    }

    /// Length of one agent's block: pose, velocity, observer, weights.
    pub fn stride(&self) -> usize {
        W + 2 * self.nodes
    }

    pub fn state_len(&self) -> usize {
        self.stride() * self.scenario.agents()
    }

    fn block<'s>(&self, y: &'s [f64], i: usize) -> &'s [f64] {
        &y[i * self.stride()..(i + 1) * self.stride()]
    }

    /// Weights carried in agent `i`'s state block.
    pub fn weights(&self, y: &[f64], i: usize) -> WeightMatrix {
        let b = self.block(y, i);
        WeightMatrix(MatrixXx2::from_column_slice(&b[W..]))
    }

    /// Fleet state at rest at the origin with zero weights, or the frozen
    /// weights in the experience phase.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.state_len()];
        let stride = self.stride();
        for i in 0..self.scenario.agents() {
            let b = &mut y[i * stride..(i + 1) * stride];
            let q = GeneralCoordinates::new(0.0, 0.0, 0.0);
            b[OBS..OBS + 4]
                .copy_from_slice(ObserverState::initialized_from(&q).to_vector().as_slice());
            if let Phase::Experience(ws) = &self.phase {
                b[W..].copy_from_slice(ws[i].0.as_slice());
            }
        }
        y
    }

    pub fn eval_agent(&self, y: &[f64], t: f64, i: usize) -> AgentEval {
        let sc = self.scenario;
        let b = self.block(y, i);
        let q = GeneralCoordinates::new(b[Q], b[Q + 1], b[Q + 2]);
        let u = BodyVelocity::new(b[U], b[U + 1]);
        let obs = ObserverState::from_slice(&b[OBS..OBS + 4]);
        let u_hat = estimate(&obs);
        let reference = sc.references[self.assignment[i]].eval(t);
        let error = tracking_error(&q, &reference);
        let u_c = virtual_velocity(&error, &reference, &sc.gains).to_vector();
        let u_c_dot = virtual_velocity_rate(&error, &reference, &u_hat, &sc.gains);
        let regressor = sc.lattice.eval_basis(u_hat.to_vector());
        let w = self.weights(y, i);
        let torque = match self.phase {
            Phase::Learning => adaptive_torque,
            Phase::Experience(_) => experience_torque,
        };
        let command = torque(
            &error,
            &reference,
            &u_hat,
            &u_c_dot,
            &w,
            &regressor,
            &sc.gains,
            &self.m_bar,
        );
        AgentEval {
            q,
            u,
            obs,
            u_hat,
            reference,
            error,
            u_c,
            regressor,
            command,
        }
    }

    /// Write agent `i`'s rate block into `out` (the full-length rate vector).
    pub fn agent_rate(&self, y: &[f64], t: f64, i: usize, out: &mut [f64]) {
        let sc = self.scenario;
        let ev = self.eval_agent(y, t, i);
        let stride = self.stride();
        let d = &mut out[i * stride..(i + 1) * stride];
        d[Q..Q + 3].copy_from_slice(kinematics(&ev.q, &ev.u).as_slice());
        d[U..U + 2].copy_from_slice(body_accel(&sc.vehicle, &ev.u, &ev.command.tau).as_slice());
        let o = observer_rates(&ev.obs, &sc.observer, ev.q.theta, rotating_frame(&ev.q));
        d[OBS..OBS + 4].copy_from_slice(o.as_slice());
        match self.phase {
            Phase::Learning => {
                let w_i = self.weights(y, i);
                let others: Vec<(f64, WeightMatrix)> = sc
                    .graph
                    .neighbors(i)
                    .map(|(j, a)| (a, self.weights(y, j)))
                    .collect();
                let refs: Vec<(f64, &WeightMatrix)> = others.iter().map(|(a, w)| (*a, w)).collect();
                let u_tilde = ev.u_c - ev.u_hat.to_vector();
                let rate = weight_update_rate(&ev.regressor, &u_tilde, &w_i, &refs, &sc.gains);
                d[W..].copy_from_slice(rate.as_slice());
            }
            Phase::Experience(_) => d[W..].fill(0.0),
        }
    }

    /// Full fleet rate with agents visited in the given order.
    pub fn rate_in_order(&self, t: f64, y: &[f64], out: &mut [f64], order: &[usize]) {
        for &i in order {
            self.agent_rate(y, t, i, out);
        }
    }

    pub fn rate(&self, t: f64, y: &[f64], out: &mut [f64]) {
        for i in 0..self.scenario.agents() {
            self.agent_rate(y, t, i, out);
        }
    }

    fn record(&self, y: &[f64], t: f64, i: usize) -> Record {
        let sc = self.scenario;
        let ev = self.eval_agent(y, t, i);
        let h = unknown_dynamics(&sc.vehicle, &ev.u);
        let w = self.weights(y, i);
        let est = h - predict(&w, &sc.lattice.eval_basis(ev.u.to_vector()));
        let u_tilde = ev.u_c - ev.u.to_vector();
        Record {
            t,
            agent: i,
            q: ev.q,
            u: ev.u,
            u_hat: ev.u_hat,
            reference: ev.reference,
            error: ev.error,
            u_c: BodyVelocity::from_vector(ev.u_c),
            tau: ev.command.tau,
            saturated: ev.command.saturated,
            h,
            est_err: est,
            v_diag: lyapunov_value(&ev.error, &u_tilde, 0.0, &sc.gains, &self.m_bar),
        }
    }

    fn check_finite(&self, y: &[f64], t: f64, step: usize) -> Result<()> {
        let stride = self.stride();
        for (k, v) in y.iter().enumerate() {
            let reason = if !v.is_finite() {
                "non-finite state"
            } else if v.abs() > DIVERGENCE_BOUND {
                "state magnitude exceeds 1e6"
            } else {
                continue;
            };
            return Err(Error::Divergence {
                t,
                step,
                agent: k / stride + 1,
                reason: format!("{reason} (component {} = {v})", k % stride),
            });
        }
        Ok(())
    }

    /// Integrate from the initial state to `t_end`.
    pub fn run(&self) -> Result<RunLog> {
        let s = self.scenario.settings;
        let n = self.scenario.agents();
        let steps = s.steps();
        let log_every = s.every(s.log_interval);
        let snap_every = s.every(s.snapshot_interval);
        let mut y = self.initial_state();
        let mut rk = Rk4::new(y.len());
        let mut log = RunLog::new(
            n,
            s.dt,
            self.assignment.clone(),
            matches!(self.phase, Phase::Learning),
        );
        let emit = |log: &mut RunLog, y: &[f64], k: usize| {
            let t = k as f64 * s.dt;
            if k.is_multiple_of(log_every) || k == steps {
                for i in 0..n {
                    log.records.push(self.record(y, t, i));
                }
            }
            if k.is_multiple_of(snap_every) || k == steps {
                log.snapshots.push(FleetSnapshot {
                    t,
                    weights: (0..n).map(|i| self.weights(y, i)).collect(),
                });
            }
        };
        emit(&mut log, &y, 0);
        for k in 0..steps {
            let t = k as f64 * s.dt;
            rk.step(|t, y, d| self.rate(t, y, d), &mut y, t, s.dt);
            self.check_finite(&y, t + s.dt, k + 1)?;
            emit(&mut log, &y, k + 1);
        }
        Ok(log)
    }
}

/// Learning phase: every agent tracks its own reference and adapts its weights.
pub fn run_learning(scenario: &Scenario) -> Result<RunLog> {
    let assignment = (0..scenario.agents()).collect();
    FleetDynamics::new(scenario, assignment, Phase::Learning).run()
}

/// Check that `assignment` is a permutation of `0..n`.
pub fn check_assignment(assignment: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if assignment.len() != n {
        return Err(Error::Argument(format!(
            "assignment has {} entries, fleet has {n} agents",
            assignment.len()
        )));
    }
    for &a in assignment {
        if a >= n || std::mem::replace(&mut seen[a], true) {
            return Err(Error::Argument(format!(
                "assignment {:?} is not a permutation of 1..={n}",
                assignment.iter().map(|a| a + 1).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

/// Experience phase: agent `i` follows reference `assignment[i]` using the
/// frozen weights `consolidated[i]`.
pub fn run_experience(
    scenario: &Scenario,
    consolidated: &[WeightMatrix],
    assignment: &[usize],
) -> Result<RunLog> {
    let n = scenario.agents();
    check_assignment(assignment, n)?;
    if consolidated.len() != n {
        return Err(Error::Argument(format!(
            "{} weight matrices given for {n} agents",
            consolidated.len()
        )));
    }
    if let Some(i) = consolidated
        .iter()
        .position(|w| w.nodes() != scenario.lattice.len())
    {
        return Err(Error::Argument(format!(
            "weights of agent {} have {} rows, lattice has {} nodes",
            i + 1,
            consolidated[i].nodes(),
            scenario.lattice.len()
        )));
    }
    FleetDynamics::new(
        scenario,
        assignment.to_vec(),
        Phase::Experience(consolidated.to_vec()),
    )
    .run()
}
