use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdl_fleet::commands::{self, ExportKind, ScenarioResult};
use cdl_fleet::Error;

/// Cooperative learning control of a vehicle fleet.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Check a scenario config and list every violated invariant.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the learning phase and write logs, weights and metrics.
    Learn {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $OUTPUT_DIR, then sim.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the acceptance thresholds.
        #[arg(long)]
        check: bool,
    },
    /// Run the experience phase with consolidated weights.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding wbar_agent<i>.csv.
        #[arg(long)]
        weights: PathBuf,
        /// Reference followed by each agent, 1-based, e.g. 3,1,2,4.
        #[arg(long)]
        assignment: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the acceptance thresholds, including a zero-weight ablation.
        #[arg(long)]
        check: bool,
    },
    /// Render plots and CSV slices from a run directory.
    Export {
        /// Run directory written by learn or replay.
        #[arg(long)]
        out: PathBuf,
        /// tracking, observer, weights, estimation or trajectory2d.
        #[arg(long)]
        what: String,
    },
}

fn report(r: &ScenarioResult) -> i32 {
    println!("log:     {}", r.log_path.display());
    println!("metrics: {}", r.metrics_path.display());
    for p in &r.weight_paths {
        println!("weights: {}", p.display());
    }
    if let Some(checks) = &r.checks {
        for c in checks {
            println!("{c}");
        }
    }
    r.exit_code()
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.verb {
        Verb::Validate { config } => {
            let report = commands::cmd_validate(&config)?;
            for w in &report.warnings {
                println!("warning: {w}");
            }
            for v in &report.violations {
                println!("violation: {v}");
            }
            if report.is_clean() {
                println!("{}: ok", config.display());
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Verb::Learn { config, out, check } => Ok(report(&commands::cmd_learn(
            &config,
            out.as_deref(),
            check,
        )?)),
        Verb::Replay {
            config,
            weights,
            assignment,
            out,
            check,
        } => {
            let assignment = assignment
                .as_deref()
                .map(commands::parse_assignment)
                .transpose()?;
            Ok(report(&commands::cmd_replay(
                &config,
                &weights,
                assignment.as_deref(),
                out.as_deref(),
                check,
            )?))
        }
        Verb::Export { out, what } => {
            let kind: ExportKind = what.parse()?;
            for p in commands::cmd_export(&out, kind)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
