//! Undirected weighted communication graph.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues below this are treated as zero when counting graph components.
pub const SPECTRAL_ZERO_TOL: f64 = 1e-9;

/// Adjacency `a_ij ≥ 0` of an undirected graph over `n` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetGraph {
    adjacency: DMatrix<f64>,
}

/// A broken graph invariant. Indices are zero-based; `Display` prints them
/// one-based to match agent numbering in logs.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphViolation {
    Empty,
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    Asymmetric { i: usize, j: usize },
    SelfLoop { i: usize, value: f64 },
    Disconnected { components: usize },
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphViolation::Empty => write!(f, "graph has no agents"),
            GraphViolation::NonFinite { i, j } => {
                write!(f, "non-finite weight at ({}, {})", i + 1, j + 1)
            }
            GraphViolation::Negative { i, j, value } => write!(
                f,
                "nonnegativity violated at ({}, {}): weight {value}",
                i + 1,
                j + 1
            ),
            GraphViolation::Asymmetric { i, j } => {
                write!(f, "symmetry violated at ({}, {})", i + 1, j + 1)
            }
            GraphViolation::SelfLoop { i, value } => {
                write!(f, "nonzero diagonal at ({0}, {0}): {value}", i + 1)
            }
            GraphViolation::Disconnected { components } => {
                write!(f, "graph is not connected ({components} components)")
            }
        }
    }
}

impl FleetGraph {
    /// Wrap an adjacency matrix. Nothing is checked here; see [`FleetGraph::validate`].
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Self {
        assert_eq!(
            adjacency.nrows(),
            adjacency.ncols(),
            "adjacency must be square"
        );
        Self { adjacency }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self::from_adjacency(DMatrix::from_fn(n, n, |i, j| {
            rows[i][j]
        })))
    }

    /// Ring `1 – 2 – … – n – 1`.
    pub fn cycle(n: usize, weight: f64) -> Self {
        let mut a = DMatrix::zeros(n, n);
        if n >= 2 {
            for i in 0..n {
                let j = (i + 1) % n;
                if i != j {
                    a[(i, j)] = weight;
                    a[(j, i)] = weight;
                }
            }
        }
        Self::from_adjacency(a)
    }

    pub fn complete(n: usize, weight: f64) -> Self {
        Self::from_adjacency(DMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { 0.0 } else { weight },
        ))
    }

    pub fn path(n: usize, weight: f64) -> Self {
        let mut a = DMatrix::zeros(n, n);
        for i in 1..n {
            a[(i - 1, i)] = weight;
            a[(i, i - 1)] = weight;
        }
        Self::from_adjacency(a)
    }

    pub fn agents(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// `(j, a_ij)` for every neighbour `j` of `i` with `a_ij ≠ 0`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.agents())
            .filter(move |&j| j != i && self.adjacency[(i, j)] != 0.0)
            .map(move |j| (j, self.adjacency[(i, j)]))
    }

    /// `L = D − A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.agents();
        let mut l = -self.adjacency.clone();
        for i in 0..n {
            l[(i, i)] = (0..n)
                .filter(|&j| j != i)
                .map(|j| self.adjacency[(i, j)])
                .sum();
        }
        l
    }

    /// Number of connected components, by breadth-first search over nonzero edges.
    pub fn components(&self) -> usize {
        let n = self.agents();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for (j, seen_j) in seen.iter_mut().enumerate() {
                    if !*seen_j && (self.adjacency[(i, j)] != 0.0 || self.adjacency[(j, i)] != 0.0)
                    {
                        *seen_j = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.agents() > 0 && self.components() == 1
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.laplacian())
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Second-smallest Laplacian eigenvalue λ₂ (0 for a single agent).
    pub fn algebraic_connectivity(&self) -> f64 {
        self.laplacian_spectrum().get(1).copied().unwrap_or(0.0)
    }

    /// All violated invariants: finiteness, nonnegativity, symmetry, zero
    /// diagonal and connectivity.
    pub fn validate(&self) -> Vec<GraphViolation> {
        let n = self.agents();
        if n == 0 {
            return vec![GraphViolation::Empty];
        }
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let a = self.adjacency[(i, j)];
                if !a.is_finite() {
                    out.push(GraphViolation::NonFinite { i, j });
                    continue;
                }
                if i == j {
                    if a != 0.0 {
                        out.push(GraphViolation::SelfLoop { i, value: a });
                    }
                    continue;
                }
                if a < 0.0 {
                    out.push(GraphViolation::Negative { i, j, value: a });
                }
                if j > i && a != self.adjacency[(j, i)] {
                    out.push(GraphViolation::Asymmetric { i, j });
                }
            }
        }
        let components = self.components();
        if components > 1 {
            out.push(GraphViolation::Disconnected { components });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ring_laplacian() {
        let l = FleetGraph::cycle(4, 1.0).laplacian();
        let want = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.0, -1.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                -1.0, 0.0, -1.0, 2.0,
            ],
        );
        assert_eq!(l, want);
    }

    #[test]
    fn single_agent_laplacian() {
        let g = FleetGraph::from_adjacency(DMatrix::zeros(1, 1));
        assert_eq!(g.laplacian(), DMatrix::zeros(1, 1));
        assert!(g.is_connected());
        assert!(g.validate().is_empty());
    }

    #[test]
    fn complete_graph_spectrum() {
        let g = FleetGraph::complete(3, 1.0);
        let want = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { -1.0 });
        assert_eq!(g.laplacian(), want);
        let ev = g.laplacian_spectrum();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn connectivity_examples() {
        assert!(FleetGraph::cycle(4, 1.0).is_connected());
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(3, 2)] = 1.0;
        let g = FleetGraph::from_adjacency(a);
        assert!(!g.is_connected());
        assert_eq!(
            g.validate(),
            vec![GraphViolation::Disconnected { components: 2 }]
        );
    }

    #[test]
    fn validation_reports_indices() {
        let mut a = FleetGraph::cycle(4, 1.0).adjacency().clone();
        a[(0, 1)] = 2.0;
        let v = FleetGraph::from_adjacency(a).validate();
        assert_eq!(v, vec![GraphViolation::Asymmetric { i: 0, j: 1 }]);
        assert_eq!(v[0].to_string(), "symmetry violated at (1, 2)");

        let mut a = FleetGraph::cycle(4, 1.0).adjacency().clone();
        a[(0, 2)] = -1.0;
        a[(2, 0)] = -1.0;
        let v = FleetGraph::from_adjacency(a).validate();
        assert!(v.contains(&GraphViolation::Negative {
            i: 0,
            j: 2,
            value: -1.0
        }));
        assert!(v.contains(&GraphViolation::Negative {
            i: 2,
            j: 0,
            value: -1.0
        }));

        let mut a = FleetGraph::cycle(3, 1.0).adjacency().clone();
        a[(1, 1)] = 0.5;
        let v = FleetGraph::from_adjacency(a).validate();
        assert_eq!(v, vec![GraphViolation::SelfLoop { i: 1, value: 0.5 }]);

        assert!(FleetGraph::cycle(4, 1.0).validate().is_empty());
    }

    #[test]
    fn presets() {
        assert_eq!(
            FleetGraph::path(3, 1.0).neighbors(1).collect::<Vec<_>>(),
            vec![(0, 1.0), (2, 1.0)]
        );
        assert_eq!(
            FleetGraph::cycle(2, 1.0).laplacian(),
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        assert!(FleetGraph::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_none());
    }
}
