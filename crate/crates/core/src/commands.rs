//! The batch verbs behind the command-line front-end.
//!
//! A run directory holds `log.csv`, `metrics.txt`, a copy of the scenario as
//! `config.toml`, and for learning runs the snapshots under `weights/` plus one
//! `wbar_agent<i>.csv` per agent.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::checks::{self, consolidate_all, CheckOutcome};
use crate::config::{FleetConfig, RunMode, OUTPUT_DIR_ENV};
use crate::engine::log::consolidated_file_name;
use crate::engine::metrics::{summarize, MetricsSummary};
use crate::engine::sim::check_assignment;
use crate::engine::{run_experience, run_learning, RunLog, Scenario};
use crate::error::{Error, Result};
use crate::rbf::WeightMatrix;

pub use crate::config::ConfigReport;
pub use crate::export::{cmd_export, ExportKind};

pub const LOG_FILE: &str = "log.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const CONFIG_COPY: &str = "config.toml";
pub const CHECKS_FILE: &str = "checks.txt";
pub const SNAPSHOT_DIR: &str = "weights";

/// Paths written by a run and, with `--check`, the acceptance outcomes.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub out_dir: PathBuf,
    pub log_path: PathBuf,
    pub metrics_path: PathBuf,
    pub weight_paths: Vec<PathBuf>,
    pub metrics: MetricsSummary,
    pub checks: Option<Vec<CheckOutcome>>,
}

impl ScenarioResult {
    pub fn all_passed(&self) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|c| c.iter().all(|o| o.passed))
    }

    /// 0 when the run succeeded and every requested check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

/// Load a config and report every violated invariant and warning.
pub fn cmd_validate(config_path: &Path) -> Result<ConfigReport> {
    Ok(FleetConfig::load(config_path)?.check(RunMode::Learning))
}

/// `--out`, else `$OUTPUT_DIR`, else `sim.output_dir` from the config.
pub fn resolve_out_dir(cfg: &FleetConfig, out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => {
            if std::env::var_os(OUTPUT_DIR_ENV).is_some() {
                cfg.output_dir()
            } else {
                cfg.sim.output_dir.clone()
            }
        }
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::io(format!("writing {}", p.display()), e))
}

fn write_common(
    cfg: &FleetConfig,
    scenario: &Scenario,
    log: &RunLog,
    out: &Path,
    extra: &[(String, f64)],
) -> Result<(PathBuf, PathBuf, MetricsSummary)> {
    create_dir(out)?;
    let log_path = out.join(LOG_FILE);
    log.save_csv(&log_path)?;
    let window = crate::config::SimConfig::TRAILING_FRACTION * log.t_end();
    let mut metrics = summarize(log, &scenario.lattice, window);
    for (k, v) in extra {
        metrics.push(k.clone(), *v);
    }
    let metrics_path = out.join(METRICS_FILE);
    write_text(&metrics_path, &metrics.to_text())?;
    write_text(&out.join(CONFIG_COPY), &cfg.to_toml_string())?;
    Ok((log_path, metrics_path, metrics))
}

fn write_checks(out: &Path, checks: &[CheckOutcome]) -> Result<()> {
    let text: String = checks.iter().map(|c| format!("{c}\n")).collect();
    write_text(&out.join(CHECKS_FILE), &text)
}

/// Run the learning phase, write logs, snapshots, consolidated weights and metrics.
pub fn cmd_learn(config_path: &Path, out: Option<&Path>, check: bool) -> Result<ScenarioResult> {
    let cfg = FleetConfig::load(config_path)?;
    learn_with(&cfg, &resolve_out_dir(&cfg, out), check)
}

/// [`cmd_learn`] on an already loaded config.
pub fn learn_with(cfg: &FleetConfig, out: &Path, check: bool) -> Result<ScenarioResult> {
    let scenario = cfg.scenario(RunMode::Learning)?;
    let start = Instant::now();
    let log = run_learning(&scenario)?;
    let elapsed = start.elapsed();
    log::info!(
        "learning run of {} s finished in {:.2?}",
        log.t_end(),
        elapsed
    );

    let [t_a, t_b] = cfg.sim.consolidation_window();
    let w_bar = consolidate_all(&log, t_a, t_b)?;
    let extra = vec![
        ("consolidation_start".to_string(), t_a),
        ("consolidation_end".to_string(), t_b),
        ("runtime_seconds".to_string(), elapsed.as_secs_f64()),
    ];
    let (log_path, metrics_path, metrics) = write_common(cfg, &scenario, &log, out, &extra)?;
    let snap_dir = out.join(SNAPSHOT_DIR);
    create_dir(&snap_dir)?;
    log.save_snapshots(&scenario.lattice, &snap_dir)?;
    let mut weight_paths = Vec::new();
    for (i, w) in w_bar.iter().enumerate() {
        let p = out.join(consolidated_file_name(i));
        w.save(&scenario.lattice, &p)?;
        weight_paths.push(p);
    }
    let checks = check.then(|| checks::check_learning(&log, &scenario, &w_bar, Some(elapsed)));
    if let Some(c) = &checks {
        write_checks(out, c)?;
    }
    Ok(ScenarioResult {
        out_dir: out.to_path_buf(),
        log_path,
        metrics_path,
        weight_paths,
        metrics,
        checks,
    })
}

/// Parse a one-based comma-separated permutation such as `3,1,2,4` into zero-based indices.
pub fn parse_assignment(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k - 1),
                _ => Err(Error::Argument(format!(
                    "bad assignment entry `{s}` (expected 1-based agent numbers)"
                ))),
            }
        })
        .collect()
}

/// Load `wbar_agent<i>.csv` for every agent from `dir`.
pub fn load_consolidated(scenario: &Scenario, dir: &Path) -> Result<Vec<WeightMatrix>> {
    (0..scenario.agents())
        .map(|i| WeightMatrix::load(&scenario.lattice, &dir.join(consolidated_file_name(i))))
        .collect()
}

/// Run the experience phase with consolidated weights from `weights_dir`.
///
/// `assignment[i]` is the zero-based reference index for agent `i`; identity
/// when `None`. With `check`, a zero-weight ablation is also simulated.
pub fn cmd_replay(
    config_path: &Path,
    weights_dir: &Path,
    assignment: Option<&[usize]>,
    out: Option<&Path>,
    check: bool,
) -> Result<ScenarioResult> {
    let cfg = FleetConfig::load(config_path)?;
    replay_with(
        &cfg,
        weights_dir,
        assignment,
        &resolve_out_dir(&cfg, out),
        check,
    )
}

/// [`cmd_replay`] on an already loaded config.
pub fn replay_with(
    cfg: &FleetConfig,
    weights_dir: &Path,
    assignment: Option<&[usize]>,
    out: &Path,
    check: bool,
) -> Result<ScenarioResult> {
    let scenario = cfg.scenario(RunMode::Experience)?;
    let n = scenario.agents();
    let identity: Vec<usize> = (0..n).collect();
    let assignment = assignment.unwrap_or(&identity);
    check_assignment(assignment, n)?;
    let w_bar = load_consolidated(&scenario, weights_dir)?;
    let log = run_experience(&scenario, &w_bar, assignment)?;
    let extra: Vec<(String, f64)> = assignment
        .iter()
        .enumerate()
        .map(|(i, &r)| (format!("agent{}.reference", i + 1), (r + 1) as f64))
        .collect();
    let (log_path, metrics_path, metrics) = write_common(cfg, &scenario, &log, out, &extra)?;
    let checks = if check {
        let zeros = vec![WeightMatrix::zeros(scenario.lattice.len()); n];
        let ablation = run_experience(&scenario, &zeros, assignment)?;
        let c = checks::check_experience(&log, &ablation);
        write_checks(out, &c)?;
        Some(c)
    } else {
        None
    };
    Ok(ScenarioResult {
        out_dir: out.to_path_buf(),
        log_path,
        metrics_path,
        weight_paths: Vec::new(),
        metrics,
        checks,
    })
}
