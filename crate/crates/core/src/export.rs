//! SVG figures and CSV slices rendered from a run directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plotters::prelude::*;
use serde::Deserialize;

use crate::commands::{CONFIG_COPY, LOG_FILE, SNAPSHOT_DIR};
use crate::config::FleetConfig;
use crate::error::{Error, Result};
use crate::rbf::WeightMatrix;

/// Which figure to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Tracking,
    Observer,
    Weights,
    Estimation,
    Trajectory2d,
}

impl ExportKind {
    pub const ALL: [ExportKind; 5] = [
        ExportKind::Tracking,
        ExportKind::Observer,
        ExportKind::Weights,
        ExportKind::Estimation,
        ExportKind::Trajectory2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExportKind::Tracking => "tracking",
            ExportKind::Observer => "observer",
            ExportKind::Weights => "weights",
            ExportKind::Estimation => "estimation",
            ExportKind::Trajectory2d => "trajectory2d",
        }
    }
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Argument(format!(
                    "unknown export `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// One row of `log.csv`.
#[derive(Debug, Clone, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub v_hat: f64,
    pub omega_hat: f64,
    pub x_r: f64,
    pub y_r: f64,
    pub theta_r: f64,
    pub ex: f64,
    pub ey: f64,
    pub etheta: f64,
    pub tau_v: f64,
    pub tau_w: f64,
    pub sat_flag: u8,
    pub est_err_v: f64,
    pub est_err_w: f64,
    #[serde(rename = "V_diag")]
    pub v_diag: f64,
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

type Series = (String, Vec<(f64, f64)>);

fn per_agent(rows: &[LogRow], f: impl Fn(&LogRow) -> f64) -> Vec<Series> {
    let n = rows.iter().map(|r| r.agent).max().unwrap_or(0);
    (1..=n)
        .map(|a| {
            let pts = rows
                .iter()
                .filter(|r| r.agent == a)
                .map(|r| (r.t, f(r)))
                .collect();
            (format!("agent {a}"), pts)
        })
        .collect()
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |a: f64, b: f64| {
        if !(a.is_finite() && b.is_finite()) {
            (0.0, 1.0)
        } else if b - a < 1e-12 {
            (a - 0.5, b + 0.5)
        } else {
            let m = 0.05 * (b - a);
            (a - m, b + m)
        }
    };
    (pad(x0, x1), pad(y0, y1))
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn draw_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[Series],
    dashed_from: Option<usize>,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let ((x0, x1), (y0, y1)) = bounds(series);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (k, (label, pts)) in series.iter().enumerate() {
        let idx = dashed_from.map_or(k, |d| if k >= d { k - d } else { k });
        let color = Palette99::pick(idx).to_rgba();
        let style = if dashed_from.is_some_and(|d| k >= d) {
            color.mix(0.45).stroke_width(1)
        } else {
            color.stroke_width(2)
        };
        chart
            .draw_series(LineSeries::new(pts.iter().cloned(), style))
            .map_err(plot_err)?
            .label(label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], style));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

struct Panel<'a> {
    title: &'a str,
    x_desc: &'a str,
    y_desc: &'a str,
    series: Vec<Series>,
    dashed_from: Option<usize>,
}

fn render(path: &Path, panels: &[Panel<'_>]) -> Result<()> {
    let h = 420 * panels.len() as u32;
    let root = SVGBackend::new(path, (900, h)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let areas = root.split_evenly((panels.len(), 1));
    for (a, p) in areas.iter().zip(panels) {
        draw_panel(a, p.title, p.x_desc, p.y_desc, &p.series, p.dashed_from)?;
    }
    root.present().map_err(plot_err)
}

fn write_slice(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| crate::engine::log::sig9(*v)))
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Per-agent 1-norm of the weight snapshots stored in `run_dir/weights`.
pub fn weight_norm_series(run_dir: &Path) -> Result<Vec<Series>> {
    let cfg = FleetConfig::load(&run_dir.join(CONFIG_COPY))?;
    let lattice = cfg.rbf.lattice()?;
    let dir = run_dir.join(SNAPSHOT_DIR);
    let entries =
        fs::read_dir(&dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut found: Vec<(usize, u64, PathBuf)> = Vec::new();
    for e in entries {
        let p = e
            .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
            .path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let parsed = name
            .strip_prefix("weights_agent")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.split_once("_t"))
            .and_then(|(a, t)| Some((a.parse().ok()?, t.parse().ok()?)));
        if let Some((a, millis)) = parsed {
            found.push((a, millis, p));
        }
    }
    found.sort();
    let n = found.iter().map(|f| f.0).max().unwrap_or(0);
    let mut series: Vec<Series> = (1..=n)
        .map(|a| (format!("agent {a}"), Vec::new()))
        .collect();
    for (a, millis, p) in found {
        let w = WeightMatrix::load(&lattice, &p)?;
        series[a - 1].1.push((millis as f64 / 1000.0, w.l1_norm()));
    }
    Ok(series)
}

/// Render `what` from `run_dir` into `run_dir/export`, returning the written files.
pub fn cmd_export(run_dir: &Path, what: ExportKind) -> Result<Vec<PathBuf>> {
    let out = run_dir.join("export");
    let svg = out.join(format!("{}.svg", what.name()));
    let csv_path = out.join(format!("{}.csv", what.name()));
    if what == ExportKind::Weights {
        let series = weight_norm_series(run_dir)?;
        if series.is_empty() {
            return Err(Error::Argument(format!(
                "no weight snapshots under {}",
                run_dir.join(SNAPSHOT_DIR).display()
            )));
        }
        fs::create_dir_all(&out)
            .map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
        let rows = series
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.1.iter().map(move |&(t, n)| vec![t, (i + 1) as f64, n]));
        write_slice(&csv_path, &["t", "agent", "l1_norm"], rows)?;
        render(
            &svg,
            &[Panel {
                title: "Weight 1-norm",
                x_desc: "t (s)",
                y_desc: "||W||_1",
                series,
                dashed_from: None,
            }],
        )?;
        return Ok(vec![svg, csv_path]);
    }

    let rows = read_log(&run_dir.join(LOG_FILE))?;
    if rows.is_empty() {
        return Err(Error::Argument(format!(
            "{} has no records",
            run_dir.join(LOG_FILE).display()
        )));
    }
    fs::create_dir_all(&out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    let a = |r: &LogRow| r.agent as f64;
    match what {
        ExportKind::Tracking => {
            write_slice(
                &csv_path,
                &["t", "agent", "ex", "ey", "etheta"],
                rows.iter().map(|r| vec![r.t, a(r), r.ex, r.ey, r.etheta]),
            )?;
            render(
                &svg,
                &[
                    Panel {
                        title: "Position tracking error",
                        x_desc: "t (s)",
                        y_desc: "sqrt(ex^2 + ey^2) (m)",
                        series: per_agent(&rows, |r| r.ex.hypot(r.ey)),
                        dashed_from: None,
                    },
                    Panel {
                        title: "Heading tracking error",
                        x_desc: "t (s)",
                        y_desc: "etheta (rad)",
                        series: per_agent(&rows, |r| r.etheta),
                        dashed_from: None,
                    },
                ],
            )?;
        }
        ExportKind::Observer => {
            write_slice(
                &csv_path,
                &["t", "agent", "v", "v_hat", "omega", "omega_hat"],
                rows.iter()
                    .map(|r| vec![r.t, a(r), r.v, r.v_hat, r.omega, r.omega_hat]),
            )?;
            render(
                &svg,
                &[
                    Panel {
                        title: "Linear velocity estimation error",
                        x_desc: "t (s)",
                        y_desc: "v - v_hat (m/s)",
                        series: per_agent(&rows, |r| r.v - r.v_hat),
                        dashed_from: None,
                    },
                    Panel {
                        title: "Angular velocity estimation error",
                        x_desc: "t (s)",
                        y_desc: "omega - omega_hat (rad/s)",
                        series: per_agent(&rows, |r| r.omega - r.omega_hat),
                        dashed_from: None,
                    },
                ],
            )?;
        }
        ExportKind::Estimation => {
            write_slice(
                &csv_path,
                &["t", "agent", "est_err_v", "est_err_w"],
                rows.iter()
                    .map(|r| vec![r.t, a(r), r.est_err_v, r.est_err_w]),
            )?;
            render(
                &svg,
                &[
                    Panel {
                        title: "Network estimation error, v channel",
                        x_desc: "t (s)",
                        y_desc: "H_v - W^T S",
                        series: per_agent(&rows, |r| r.est_err_v),
                        dashed_from: None,
                    },
                    Panel {
                        title: "Network estimation error, omega channel",
                        x_desc: "t (s)",
                        y_desc: "H_w - W^T S",
                        series: per_agent(&rows, |r| r.est_err_w),
                        dashed_from: None,
                    },
                ],
            )?;
        }
        ExportKind::Trajectory2d => {
            write_slice(
                &csv_path,
                &["t", "agent", "x", "y", "x_r", "y_r"],
                rows.iter().map(|r| vec![r.t, a(r), r.x, r.y, r.x_r, r.y_r]),
            )?;
            let mut series: Vec<Series> = per_agent(&rows, |_| 0.0)
                .into_iter()
                .enumerate()
                .map(|(i, (label, _))| {
                    let pts = rows
                        .iter()
                        .filter(|r| r.agent == i + 1)
                        .map(|r| (r.x, r.y))
                        .collect();
                    (label, pts)
                })
                .collect();
            let n = series.len();
            for i in 0..n {
                let pts = rows
                    .iter()
                    .filter(|r| r.agent == i + 1)
                    .map(|r| (r.x_r, r.y_r))
                    .collect();
                series.push((format!("reference {}", i + 1), pts));
            }
            render(
                &svg,
                &[Panel {
                    title: "Vehicle paths and references",
                    x_desc: "x (m)",
                    y_desc: "y (m)",
                    series,
                    dashed_from: Some(n),
                }],
            )?;
        }
        ExportKind::Weights => unreachable!(),
    }
    Ok(vec![svg, csv_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ExportKind::ALL {
            assert_eq!(k.name().parse::<ExportKind>().unwrap(), k);
        }
        let err = "heatmap".parse::<ExportKind>().unwrap_err();
        assert!(err.to_string().contains("unknown export `heatmap`"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn empty_run_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(cmd_export(dir.path(), ExportKind::Tracking).is_err());
        assert!(cmd_export(dir.path(), ExportKind::Weights).is_err());
    }
}
