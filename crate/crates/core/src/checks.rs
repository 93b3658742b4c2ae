//! Acceptance thresholds for the reference fleet scenario and their evaluation.

use std::fmt;
use std::time::Duration;

use crate::control::consolidate_weights;
use crate::engine::metrics::{
    consensus_diameter, estimation_error_along, fleet_lyapunov, metric_estimation_error, metric_pe,
    metric_tracking, observer_error_max, sample_at,
};
use crate::engine::{RunLog, Scenario};
use crate::error::Result;
use crate::rbf::{WeightMatrix, DEFAULT_ACTIVATION_THRESHOLD};

/// Pinned tolerances.
pub mod thresholds {
    /// Observer errors are checked for `t` strictly after this (s).
    pub const OBSERVER_SETTLE: f64 = 0.5;
    pub const OBSERVER_MAX_ERR: f64 = 0.01;
    pub const RUNTIME_MAX_SECS: f64 = 60.0;
    /// Trailing window for tracking checks (s).
    pub const TRACKING_WINDOW: f64 = 5.0;
    pub const TRACKING_MAX_POSITION: f64 = 0.05;
    pub const TRACKING_MAX_HEADING: f64 = 0.05;
    /// Consensus diameter bound relative to `1 + ‖W̄‖_F`.
    pub const CONSENSUS_REL: f64 = 0.05;
    /// Trailing window for estimation checks (s).
    pub const ESTIMATION_WINDOW: f64 = 10.0;
    pub const ESTIMATION_REL: f64 = 0.10;
    pub const CROSS_ESTIMATION_REL: f64 = 0.15;
    pub const EXPERIENCE_MAX_POSITION: f64 = 0.05;
    /// Required ratio of trailing RMS tracking error, zero weights versus learned.
    pub const ABLATION_RATIO: f64 = 2.0;
    /// Time of the early Lyapunov sample compared against the final one (s).
    pub const LYAPUNOV_EARLY: f64 = 1.0;
}

use thresholds as th;

/// One pass/fail line.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn fmt_list(v: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = v.into_iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Per-agent consolidated weights over `[t_a, t_b]`.
pub fn consolidate_all(log: &RunLog, t_a: f64, t_b: f64) -> Result<Vec<WeightMatrix>> {
    (0..log.agents)
        .map(|i| consolidate_weights(&log.weight_history(i), t_a, t_b))
        .collect()
}

/// Element-wise mean of several weight matrices.
pub fn mean_weights(ws: &[WeightMatrix]) -> WeightMatrix {
    let mut acc = ws[0].0.clone() * 0.0;
    for w in ws {
        acc += &w.0;
    }
    WeightMatrix(acc / ws.len() as f64)
}

pub fn check_observer(log: &RunLog) -> CheckOutcome {
    let errs = observer_error_max(log, th::OBSERVER_SETTLE);
    let worst = errs.iter().flatten().cloned().fold(0.0, f64::max);
    CheckOutcome::new(
        "observer error",
        worst < th::OBSERVER_MAX_ERR,
        format!(
            "max |v-v_hat| {} max |w-w_hat| {} for t > {} s (limit {})",
            fmt_list(errs.iter().map(|e| e[0])),
            fmt_list(errs.iter().map(|e| e[1])),
            th::OBSERVER_SETTLE,
            th::OBSERVER_MAX_ERR
        ),
    )
}

pub fn check_runtime(elapsed: Duration) -> CheckOutcome {
    let s = elapsed.as_secs_f64();
    CheckOutcome::new(
        "runtime",
        s < th::RUNTIME_MAX_SECS,
        format!("{s:.2} s (limit {} s)", th::RUNTIME_MAX_SECS),
    )
}

pub fn check_tracking(log: &RunLog, name: &str, max_position: f64) -> CheckOutcome {
    let stats = metric_tracking(log, log.t_end() - th::TRACKING_WINDOW);
    let pos = stats.iter().map(|s| s.max_position);
    let head = stats.iter().map(|s| s.max_heading);
    let ok = stats
        .iter()
        .all(|s| s.max_position < max_position && s.max_heading < th::TRACKING_MAX_HEADING);
    CheckOutcome::new(
        name,
        ok,
        format!(
            "trailing {} s max position {} (limit {max_position}), max heading {} (limit {})",
            th::TRACKING_WINDOW,
            fmt_list(pos),
            fmt_list(head),
            th::TRACKING_MAX_HEADING
        ),
    )
}

pub fn check_consensus(log: &RunLog, w_bar: &WeightMatrix) -> CheckOutcome {
    let d = consensus_diameter(&log.final_weights());
    let bound = th::CONSENSUS_REL * (1.0 + w_bar.frobenius());
    CheckOutcome::new(
        "weight consensus",
        d < bound,
        format!("diameter {d:.5} (limit {bound:.5})"),
    )
}

pub fn check_estimation(log: &RunLog) -> CheckOutcome {
    let stats = metric_estimation_error(log, log.t_end() - th::ESTIMATION_WINDOW);
    let rel: Vec<f64> = stats.iter().map(|s| s.relative()).collect();
    CheckOutcome::new(
        "estimation error",
        rel.iter().all(|r| *r < th::ESTIMATION_REL),
        format!(
            "trailing {} s RMS error / RMS(H) {} (limit {})",
            th::ESTIMATION_WINDOW,
            fmt_list(rel.iter().cloned()),
            th::ESTIMATION_REL
        ),
    )
}

/// Agent `from`'s consolidated weights evaluated along agent `along`'s
/// realized velocities in the trailing estimation window.
pub fn check_cross_estimation(
    log: &RunLog,
    scenario: &Scenario,
    w_bar: &[WeightMatrix],
    from: usize,
    along: usize,
) -> CheckOutcome {
    let traj: Vec<_> = log
        .agent_window(along, log.t_end() - th::ESTIMATION_WINDOW)
        .map(|r| r.u)
        .collect();
    let s = estimation_error_along(&scenario.vehicle, &scenario.lattice, &w_bar[from], &traj);
    CheckOutcome::new(
        "cross-trajectory estimation",
        s.relative() < th::CROSS_ESTIMATION_REL,
        format!(
            "W_bar of agent {} along agent {}: RMS error / RMS(H) {:.4} (limit {})",
            from + 1,
            along + 1,
            s.relative(),
            th::CROSS_ESTIMATION_REL
        ),
    )
}

pub fn check_pe(log: &RunLog, scenario: &Scenario) -> CheckOutcome {
    let levels: Vec<f64> = (0..log.agents)
        .map(|i| {
            let period = scenario.references[log.assignment[i]].period();
            let t0 = log.t_end() - period;
            metric_pe(log, &scenario.lattice, t0, DEFAULT_ACTIVATION_THRESHOLD)[i].level
        })
        .collect();
    CheckOutcome::new(
        "persistent excitation",
        levels.iter().all(|l| *l > 0.0),
        format!("pe_level over the last reference period {:?}", levels),
    )
}

pub fn check_lyapunov(log: &RunLog) -> CheckOutcome {
    let v = fleet_lyapunov(log);
    let finite = v.iter().all(|p| p.1.is_finite());
    let early = sample_at(&v, th::LYAPUNOV_EARLY).unwrap_or(f64::NAN);
    let last = v.last().map_or(f64::NAN, |p| p.1);
    CheckOutcome::new(
        "lyapunov decrease",
        finite && last < early,
        format!(
            "V({}) = {early:.5}, V({}) = {last:.5}, finite throughout: {finite}",
            th::LYAPUNOV_EARLY,
            log.t_end()
        ),
    )
}

/// Checks for a learning run: observer, tracking, consensus, estimation,
/// cross-trajectory generalization, PE and Lyapunov decrease.
///
/// The cross-trajectory check uses agent 1's weights along agent 3's
/// trajectory when the fleet has at least three agents.
pub fn check_learning(
    log: &RunLog,
    scenario: &Scenario,
    w_bar: &[WeightMatrix],
    elapsed: Option<Duration>,
) -> Vec<CheckOutcome> {
    let mut out = vec![check_observer(log)];
    if let Some(e) = elapsed {
        out.push(check_runtime(e));
    }
    out.push(check_tracking(
        log,
        "learning tracking",
        th::TRACKING_MAX_POSITION,
    ));
    out.push(check_consensus(log, &mean_weights(w_bar)));
    out.push(check_estimation(log));
    if log.agents >= 3 {
        out.push(check_cross_estimation(log, scenario, w_bar, 0, 2));
    }
    out.push(check_pe(log, scenario));
    out.push(check_lyapunov(log));
    out
}

/// Checks for an experience run against its zero-weight ablation.
pub fn check_experience(learned: &RunLog, ablation: &RunLog) -> Vec<CheckOutcome> {
    let window = |log: &RunLog| log.t_end() - th::TRACKING_WINDOW;
    let rms = |log: &RunLog| -> Vec<f64> {
        metric_tracking(log, window(log))
            .iter()
            .map(|s| s.rms_position)
            .collect()
    };
    let (a, b) = (rms(learned), rms(ablation));
    let ratios: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y / x).collect();
    let max_pos: Vec<f64> = metric_tracking(learned, window(learned))
        .iter()
        .map(|s| s.max_position)
        .collect();
    vec![
        CheckOutcome::new(
            "experience tracking",
            max_pos.iter().all(|p| *p < th::EXPERIENCE_MAX_POSITION),
            format!(
                "trailing {} s max position {} (limit {})",
                th::TRACKING_WINDOW,
                fmt_list(max_pos.iter().cloned()),
                th::EXPERIENCE_MAX_POSITION
            ),
        ),
        CheckOutcome::new(
            "experience ablation",
            ratios.iter().all(|r| *r >= th::ABLATION_RATIO),
            format!(
                "trailing RMS tracking error zero-weights / learned {} (limit >= {})",
                fmt_list(ratios.iter().cloned()),
                th::ABLATION_RATIO
            ),
        ),
    ]
}
