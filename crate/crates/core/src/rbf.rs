//! Gaussian RBF network on a regular 2-D lattice.
//!
//! Inputs are body velocities `X = (v, ω)`. Node `k` sits at
//! `(v_i, ω_j)` with `k = i · nodes_w + j`, i.e. the `v` index is the slow one.
//! Weights are stored as an `N × 2` matrix whose columns are the `v` and `ω`
//! output channels.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, MatrixXx2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};

/// Centers of a Gaussian RBF network and their common width `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfLattice {
    centers: Vec<Vector2<f64>>,
    width: f64,
    nodes_per_dim: [usize; 2],
    box_min: Vector2<f64>,
    box_max: Vector2<f64>,
}

impl RbfLattice {
    /// Tensor grid including both box endpoints in each dimension.
    pub fn build(
        box_min: [f64; 2],
        box_max: [f64; 2],
        nodes_per_dim: [usize; 2],
        width: f64,
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Argument(format!(
                "RBF width must be > 0, got {width}"
            )));
        }
        for d in 0..2 {
            if !(box_min[d].is_finite() && box_max[d].is_finite() && box_min[d] < box_max[d]) {
                return Err(Error::Argument(format!(
                    "degenerate RBF box in dimension {d}: [{}, {}]",
                    box_min[d], box_max[d]
                )));
            }
            if nodes_per_dim[d] < 2 {
                return Err(Error::Argument(format!(
                    "need at least 2 RBF nodes in dimension {d}, got {}",
                    nodes_per_dim[d]
                )));
            }
        }
        let axis = |d: usize| -> Vec<f64> {
            let n = nodes_per_dim[d];
            let step = (box_max[d] - box_min[d]) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        box_max[d]
                    } else {
                        box_min[d] + step * i as f64
                    }
                })
                .collect()
        };
        let (av, aw) = (axis(0), axis(1));
        let centers = av
            .iter()
            .flat_map(|&v| aw.iter().map(move |&w| Vector2::new(v, w)))
            .collect();
        Ok(Self {
            centers,
            width,
            nodes_per_dim,
            box_min: Vector2::from(box_min),
            box_max: Vector2::from(box_max),
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vector2<f64>] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn nodes_per_dim(&self) -> [usize; 2] {
        self.nodes_per_dim
    }

    pub fn box_min(&self) -> Vector2<f64> {
        self.box_min
    }

    pub fn box_max(&self) -> Vector2<f64> {
        self.box_max
    }

    /// Grid spacing per dimension.
    pub fn spacing(&self) -> Vector2<f64> {
        let n = Vector2::new(
            (self.nodes_per_dim[0] - 1) as f64,
            (self.nodes_per_dim[1] - 1) as f64,
        );
        (self.box_max - self.box_min).component_div(&n)
    }

    /// Regressor `S(X)` with `s_k = exp(−‖X − μ_k‖² / σ²)`.
    pub fn eval_basis(&self, x: Vector2<f64>) -> DVector<f64> {
        let inv_w2 = 1.0 / (self.width * self.width);
        DVector::from_iterator(
            self.centers.len(),
            self.centers
                .iter()
                .map(|c| (-(x - c).norm_squared() * inv_w2).exp()),
        )
    }

    /// Largest `‖S(X)‖` over the given inputs; an empirical stand-in for `S_M`.
    pub fn max_basis_norm<I: IntoIterator<Item = Vector2<f64>>>(&self, inputs: I) -> f64 {
        inputs
            .into_iter()
            .map(|x| self.eval_basis(x).norm())
            .fold(0.0, f64::max)
    }
}

/// `N × 2` weight matrix. Column 0 feeds the `v` channel, column 1 the `ω` channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(pub MatrixXx2<f64>);

impl WeightMatrix {
    pub fn zeros(nodes: usize) -> Self {
        Self(MatrixXx2::zeros(nodes))
    }

    pub fn nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Entry-wise 1-norm, used for the weight-convergence plot.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// Write the `node_index,center_v,center_w,w_v,w_omega` CSV form.
    pub fn write_csv<W: Write>(&self, lattice: &RbfLattice, out: W) -> Result<()> {
        assert_eq!(
            self.nodes(),
            lattice.len(),
            "weight rows must match lattice size"
        );
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| Error::Csv {
            path: "<weights>".into(),
            source: e,
        };
        w.write_record(WEIGHT_COLUMNS).map_err(map)?;
        for (k, c) in lattice.centers().iter().enumerate() {
            w.write_record(&[
                k.to_string(),
                format!("{:e}", c[0]),
                format!("{:e}", c[1]),
                format!("{:e}", self.0[(k, 0)]),
                format!("{:e}", self.0[(k, 1)]),
            ])
            .map_err(map)?;
        }
        w.flush().map_err(|e| Error::io("flushing weight csv", e))?;
        Ok(())
    }

    pub fn save(&self, lattice: &RbfLattice, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(lattice, std::io::BufWriter::new(f))
    }

    /// Parse weights written by [`WeightMatrix::write_csv`], checking the schema and
    /// that the stored centers agree with `lattice`.
    pub fn read_csv<R: Read>(lattice: &RbfLattice, input: R, path: &Path) -> Result<Self> {
        let schema = |message: String| Error::WeightSchema {
            path: path.to_path_buf(),
            message,
        };
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| schema(format!("unreadable header: {e}")))?
            .clone();
        for (i, want) in WEIGHT_COLUMNS.iter().enumerate() {
            match headers.get(i) {
                Some(got) if got.trim() == *want => {}
                Some(got) => {
                    return Err(schema(format!(
                        "column {} should be `{want}`, found `{got}`",
                        i + 1
                    )))
                }
                None => return Err(schema(format!("missing column `{want}`"))),
            }
        }
        if headers.len() > WEIGHT_COLUMNS.len() {
            return Err(schema(format!(
                "unexpected extra column `{}`",
                &headers[WEIGHT_COLUMNS.len()]
            )));
        }
        let mut w = MatrixXx2::zeros(lattice.len());
        let mut seen = vec![false; lattice.len()];
        for (line, rec) in rdr.records().enumerate() {
            let row = line + 2;
            let rec = rec.map_err(|e| schema(format!("row {row}: {e}")))?;
            let field = |i: usize| -> Result<f64> {
                let raw = rec.get(i).unwrap_or("");
                raw.trim().parse::<f64>().map_err(|_| {
                    schema(format!(
                        "row {row}, column `{}`: cannot parse `{raw}` as a number",
                        WEIGHT_COLUMNS[i]
                    ))
                })
            };
            let idx_raw = rec.get(0).unwrap_or("");
            let k: usize = idx_raw.trim().parse().map_err(|_| {
                schema(format!(
                    "row {row}, column `node_index`: invalid index `{idx_raw}`"
                ))
            })?;
            if k >= lattice.len() {
                return Err(schema(format!(
                    "row {row}, column `node_index`: {k} exceeds lattice size {}",
                    lattice.len()
                )));
            }
            let center = Vector2::new(field(1)?, field(2)?);
            if (center - lattice.centers()[k]).norm() > 1e-9 {
                return Err(schema(format!(
                    "row {row}, columns `center_v`/`center_w`: node {k} center ({}, {}) does not match the configured lattice",
                    center[0], center[1]
                )));
            }
            let (wv, ww) = (field(3)?, field(4)?);
            if !(wv.is_finite() && ww.is_finite()) {
                return Err(schema(format!("row {row}: non-finite weight")));
            }
            w[(k, 0)] = wv;
            w[(k, 1)] = ww;
            seen[k] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(schema(format!("missing row for node_index {k}")));
        }
        Ok(Self(w))
    }

    pub fn load(lattice: &RbfLattice, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_csv(lattice, std::io::BufReader::new(f), path)
    }
}

/// Column names of the weight CSV format.
pub const WEIGHT_COLUMNS: [&str; 5] = ["node_index", "center_v", "center_w", "w_v", "w_omega"];

/// Network output `Ŵᵀ S`.
pub fn predict(w: &WeightMatrix, s: &DVector<f64>) -> Vector2<f64> {
    assert_eq!(
        w.nodes(),
        s.len(),
        "regressor length must match weight rows"
    );
    w.0.tr_mul(s)
}

/// Default activation threshold for the PE subvector.
pub const DEFAULT_ACTIVATION_THRESHOLD: f64 = 0.1;

/// Result of [`pe_level`].
#[derive(Debug, Clone, PartialEq)]
pub struct PeReport {
    /// Smallest eigenvalue of the time-averaged Gram matrix of the active subvector.
    pub level: f64,
    /// Indices of the active nodes.
    pub active: Vec<usize>,
    /// Set when no node exceeded the activation threshold.
    pub empty_active_set: bool,
}

/// Empirical persistency-of-excitation level of the regressor along a sampled
/// trajectory.
///
/// Nodes whose activation exceeds `threshold` somewhere on the trajectory form
/// the active subvector `S_ζ`; the returned level is `λ_min((1/T) Σ S_ζ S_ζᵀ dt)`.
pub fn pe_level(
    lattice: &RbfLattice,
    trajectory: &[Vector2<f64>],
    dt: f64,
    threshold: f64,
) -> PeReport {
    assert!(!trajectory.is_empty(), "pe_level needs at least one sample");
    let samples: Vec<DVector<f64>> = trajectory.iter().map(|x| lattice.eval_basis(*x)).collect();
    let active: Vec<usize> = (0..lattice.len())
        .filter(|&k| samples.iter().any(|s| s[k] > threshold))
        .collect();
    if active.is_empty() {
        log::warn!("pe_level: no RBF node exceeds the activation threshold {threshold}");
        return PeReport {
            level: 0.0,
            active,
            empty_active_set: true,
        };
    }
    let n = active.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for s in &samples {
        let sz = DVector::from_iterator(n, active.iter().map(|&k| s[k]));
        gram.syger(dt, &sz, &sz, 1.0);
    }
    let total = dt * samples.len() as f64;
    gram /= total;
    // syger only fills the lower triangle.
    gram.fill_upper_triangle_with_lower_triangle();
    let eig = SymmetricEigen::new(gram);
    let level = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    PeReport {
        level,
        active,
        empty_active_set: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ring_lattice() -> RbfLattice {
        RbfLattice::build([0.0, 0.0], [4.0, 4.0], [5, 5], 0.7).unwrap()
    }

    #[test]
    fn lattice_examples() {
        let lat = ring_lattice();
        assert_eq!(lat.len(), 25);
        assert_eq!(lat.centers()[0], Vector2::new(0.0, 0.0));
        assert_eq!(lat.centers()[24], Vector2::new(4.0, 4.0));
        assert_eq!(lat.spacing(), Vector2::new(1.0, 1.0));
        assert_eq!(lat.centers()[1], Vector2::new(0.0, 1.0));

        let unit = RbfLattice::build([0.0, 0.0], [1.0, 1.0], [2, 2], 0.5).unwrap();
        let want = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        for (c, w) in unit.centers().iter().zip(want) {
            assert_eq!(*c, Vector2::from(w));
        }

        let sym = RbfLattice::build([-1.0, -1.0], [1.0, 1.0], [3, 3], 0.5).unwrap();
        assert!(sym.centers().contains(&Vector2::new(0.0, 0.0)));
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(RbfLattice::build([0.0, 0.0], [4.0, 4.0], [5, 5], 0.0).is_err());
        assert!(RbfLattice::build([0.0, 0.0], [4.0, 4.0], [5, 5], -1.0).is_err());
        assert!(RbfLattice::build([0.0, 1.0], [4.0, 1.0], [5, 5], 0.7).is_err());
        assert!(RbfLattice::build([0.0, 0.0], [4.0, 4.0], [1, 5], 0.7).is_err());
    }

    #[test]
    fn basis_examples() {
        let lat = ring_lattice();
        let s = lat.eval_basis(lat.centers()[3]);
        assert_eq!(s[3], 1.0);
        let x = lat.centers()[7] + Vector2::new(0.7, 0.0);
        assert_abs_diff_eq!(lat.eval_basis(x)[7], (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(lat.eval_basis(x)[7], 0.36788, epsilon = 1e-5);
    }

    #[test]
    fn basis_norm_bounded_by_sqrt_n() {
        let lat = ring_lattice();
        // Deterministic low-discrepancy sweep of the box.
        let pts = (0..10_000).map(|k| {
            let a = (k as f64 * 0.618_033_988_75).fract() * 4.0;
            let b = (k as f64 * 0.754_877_666_2).fract() * 4.0;
            Vector2::new(a, b)
        });
        let s_m = lat.max_basis_norm(pts);
        assert!(s_m <= (lat.len() as f64).sqrt());
        assert!(s_m >= 1.0);
    }

    #[test]
    fn predict_examples() {
        let lat = ring_lattice();
        let s = lat.eval_basis(Vector2::new(1.3, 2.2));
        assert_eq!(predict(&WeightMatrix::zeros(25), &s), Vector2::zeros());

        let mut w = WeightMatrix::zeros(25);
        w.0[(4, 0)] = 2.0;
        let mut s = DVector::zeros(25);
        s[4] = 0.5;
        assert_eq!(predict(&w, &s), Vector2::new(1.0, 0.0));

        // Brute-force sum against the matrix product.
        let mut w = WeightMatrix::zeros(25);
        for k in 0..25 {
            w.0[(k, 0)] = (k as f64 * 0.37).sin();
            w.0[(k, 1)] = (k as f64 * 0.11).cos();
        }
        let s = lat.eval_basis(lat.centers()[12]);
        let mut brute = Vector2::zeros();
        for j in 0..25 {
            brute[0] += w.0[(j, 0)] * s[j];
            brute[1] += w.0[(j, 1)] * s[j];
        }
        assert_abs_diff_eq!(predict(&w, &s), brute, epsilon = 1e-14);
    }

    #[test]
    fn pe_constant_trajectory_is_degenerate() {
        let lat = ring_lattice();
        let traj = vec![lat.centers()[12]; 500];
        let r = pe_level(&lat, &traj, 0.01, DEFAULT_ACTIVATION_THRESHOLD);
        assert!(r.active.len() > 1);
        assert!(
            r.level.abs() < 1e-12,
            "rank-one Gram should have λ_min ≈ 0, got {}",
            r.level
        );
    }

    fn circle(period_count: usize, shift: usize) -> Vec<Vector2<f64>> {
        let dt = 0.01;
        let n = (2.0 * PI / dt).round() as usize;
        // sample whole periods: dθ chosen so n samples close one loop exactly
        let dtheta = 2.0 * PI / n as f64;
        (0..n * period_count)
            .map(|k| {
                let a = (k + shift) as f64 * dtheta;
                Vector2::new(2.0 + a.cos(), 2.0 + a.sin())
            })
            .collect()
    }

    #[test]
    fn pe_circle_is_exciting_and_period_invariant() {
        let lat = ring_lattice();
        let one = pe_level(&lat, &circle(1, 0), 0.01, DEFAULT_ACTIVATION_THRESHOLD);
        assert!(one.level > 0.0);
        let two = pe_level(&lat, &circle(2, 0), 0.01, DEFAULT_ACTIVATION_THRESHOLD);
        assert!((two.level - one.level).abs() <= 0.01 * one.level);
        let shifted = pe_level(&lat, &circle(1, 137), 0.01, DEFAULT_ACTIVATION_THRESHOLD);
        assert!((shifted.level - one.level).abs() <= 0.01 * one.level);
    }

    #[test]
    fn pe_far_away_has_empty_active_set() {
        let lat = ring_lattice();
        let r = pe_level(&lat, &[Vector2::new(40.0, 40.0)], 0.01, 0.1);
        assert!(r.empty_active_set);
        assert_eq!(r.level, 0.0);
    }

    #[test]
    fn weight_csv_round_trip_and_schema_errors() {
        let lat = ring_lattice();
        let mut w = WeightMatrix::zeros(25);
        w.0[(3, 1)] = -0.125;
        w.0[(20, 0)] = 1.0 / 3.0;
        let mut buf = Vec::new();
        w.write_csv(&lat, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("node_index,center_v,center_w,w_v,w_omega\n"));
        let back = WeightMatrix::read_csv(&lat, buf.as_slice(), Path::new("w.csv")).unwrap();
        assert_eq!(back, w);

        let bad = text.replacen("w_omega", "w_w", 1);
        let err = WeightMatrix::read_csv(&lat, bad.as_bytes(), Path::new("w.csv")).unwrap_err();
        assert!(err.to_string().contains("w_omega"), "{err}");

        let bad = text.replacen("\n3,0e0,3e0,0e0,-1.25e-1", "\n3,0e0,3e0,oops,-1.25e-1", 1);
        let err = WeightMatrix::read_csv(&lat, bad.as_bytes(), Path::new("w.csv")).unwrap_err();
        assert!(err.to_string().contains("`w_v`"), "{err}");
    }
}
