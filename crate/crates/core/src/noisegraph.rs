//! Noise-correlation graphs: adjacency spectra, collective-channel rates and
//! the complete-positivity window for the correlation strength `c`.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::Serialize;
use thiserror::Error;

/// Symmetry tolerance accepted by [`build_custom`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Row-sum tolerance for regular-degree detection.
pub const REGULARITY_TOL: f64 = 1e-10;
/// Slack allowed on `1 + c λ >= 0`.
pub const POSITIVITY_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("cycle graph needs at least 3 sites, got {0}")]
    TooSmall(usize),
    #[error("adjacency is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),
    #[error("adjacency is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("adjacency contains a non-finite entry")]
    NonFinite,
    #[error("correlation c = {c} outside positivity range [{c_min}, {c_max}]")]
    PositivityViolated { c: f64, c_min: f64, c_max: f64 },
    #[error("base rate gamma0 must be positive and finite, got {0}")]
    InvalidRate(f64),
}

/// A symmetric weighted adjacency matrix with its cached spectrum.
#[derive(Clone, Debug)]
pub struct NoiseGraph {
    n: usize,
    adjacency: Mat<f64>,
    eigvals: Vec<f64>,
    eigvecs: Mat<f64>,
    regular_degree: Option<usize>,
    kind: GraphKind,
}

/// Which constructor produced a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dimer,
    Cycle,
    Custom,
}

impl NoiseGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &Mat<f64> {
        &self.adjacency
    }

    /// Adjacency eigenvalues, ascending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Real orthonormal eigenvectors; column `α` belongs to `eigvals()[α]`.
    pub fn eigvecs(&self) -> &Mat<f64> {
        &self.eigvecs
    }

    pub fn regular_degree(&self) -> Option<usize> {
        self.regular_degree
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_empty_graph(&self) -> bool {
        self.adjacency.norm_l2() == 0.0
    }

    /// Complex discrete Fourier modes `u_k(j) = e^{ikj}/√n`, `k = 2πm/n`,
    /// for cycle graphs. Returned as `(eigenvalue, mode)` pairs in `m` order.
    pub fn fourier_modes(&self) -> Option<Vec<(f64, Vec<c64>)>> {
        if self.kind != GraphKind::Cycle {
            return None;
        }
        let n = self.n;
        let norm = 1.0 / (n as f64).sqrt();
        Some(
            (0..n)
                .map(|m| {
                    let k = 2.0 * PI * m as f64 / n as f64;
                    let mode = (0..n)
                        .map(|j| c64::from_polar(norm, k * j as f64))
                        .collect();
                    (2.0 * k.cos(), mode)
                })
                .collect(),
        )
    }

    /// Noise correlation matrix `Γ = γ₀ (I + c A)`.
    pub fn gamma_matrix(&self, gamma0: f64, c: f64) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            gamma0 * (delta + c * self.adjacency[(i, j)])
        })
    }
}

/// Ring of `n` sites with nearest-neighbour couplings and periodic boundary.
///
/// Eigenvectors are the real cosine/sine combinations of the Fourier modes.
pub fn build_cycle(n: usize) -> Result<NoiseGraph, GraphError> {
    if n < 3 {
        return Err(GraphError::TooSmall(n));
    }
    let adjacency = Mat::from_fn(n, n, |i, j| {
        let d = (i + n - j) % n;
        if d == 1 || d == n - 1 {
            1.0
        } else {
            0.0
        }
    });
    let nf = n as f64;
    let mut modes: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    modes.push((2.0, vec![1.0 / nf.sqrt(); n]));
    for m in 1..n.div_ceil(2) {
        let k = 2.0 * PI * m as f64 / nf;
        let s = (2.0 / nf).sqrt();
        modes.push((
            2.0 * k.cos(),
            (0..n).map(|j| s * (k * j as f64).cos()).collect(),
        ));
        modes.push((
            2.0 * k.cos(),
            (0..n).map(|j| s * (k * j as f64).sin()).collect(),
        ));
    }
    if n % 2 == 0 {
        let alt = (0..n)
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt())
            .collect();
        modes.push((-2.0, alt));
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigvals = modes.iter().map(|m| m.0).collect();
    let eigvecs = Mat::from_fn(n, n, |j, a| modes[a].1[j]);
    Ok(NoiseGraph {
        n,
        adjacency,
        eigvals,
        eigvecs,
        regular_degree: Some(2),
        kind: GraphKind::Cycle,
    })
}

/// Two sites joined by a single edge.
pub fn build_dimer() -> NoiseGraph {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    NoiseGraph {
        n: 2,
        adjacency: Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 }),
        eigvals: vec![-1.0, 1.0],
        // columns: antisymmetric (1,-1)/√2 for λ=-1, symmetric (1,1)/√2 for λ=+1
        eigvecs: Mat::from_fn(2, 2, |i, a| if a == 0 && i == 1 { -s } else { s }),
        regular_degree: Some(1),
        kind: GraphKind::Dimer,
    }
}

pub fn build_custom(adjacency: Mat<f64>) -> Result<NoiseGraph, GraphError> {
    let (rows, cols) = (adjacency.nrows(), adjacency.ncols());
    if rows != cols {
        return Err(GraphError::NotSquare { rows, cols });
    }
    let n = rows;
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let a = adjacency[(i, j)];
            if !a.is_finite() {
                return Err(GraphError::NonFinite);
            }
            asym = asym.max((a - adjacency[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(GraphError::NotSymmetric(asym));
    }
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (adjacency[(i, j)] + adjacency[(j, i)]));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigensolver failed");
    let eigvals: Vec<f64> = (0..n).map(|a| eig.S()[a]).collect();
    let mut eigvecs = eig.U().to_owned();
    for a in 0..n {
        let lead = (0..n)
            .map(|i| eigvecs[(i, a)])
            .find(|v| v.abs() > 1e-12)
            .unwrap_or(1.0);
        if lead < 0.0 {
            for i in 0..n {
                eigvecs[(i, a)] = -eigvecs[(i, a)];
            }
        }
    }
    Ok(NoiseGraph {
        n,
        regular_degree: detect_regular(&sym),
        adjacency: sym,
        eigvals,
        eigvecs,
        kind: GraphKind::Custom,
    })
}

fn detect_regular(a: &Mat<f64>) -> Option<usize> {
    let n = a.nrows();
    if n == 0 {
        return None;
    }
    let sums: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).sum()).collect();
    let k = sums[0];
    if sums.iter().any(|s| (s - k).abs() > REGULARITY_TOL) {
        return None;
    }
    let kr = k.round();
    (kr >= 0.0 && (k - kr).abs() <= REGULARITY_TOL).then_some(kr as usize)
}

/// A graph together with a base rate and correlation strength.
#[derive(Clone, Debug)]
pub struct CorrelationModel {
    pub gamma0: f64,
    pub c: f64,
    pub graph: NoiseGraph,
}

impl CorrelationModel {
    /// Validates `γ₀ > 0` and that `c` lies in the positivity window.
    pub fn new(graph: NoiseGraph, gamma0: f64, c: f64) -> Result<Self, GraphError> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(GraphError::InvalidRate(gamma0));
        }
        let m = Self { gamma0, c, graph };
        m.check_positivity()?;
        Ok(m)
    }

    pub fn check_positivity(&self) -> Result<(), GraphError> {
        let (c_min, c_max) = positivity_range(&self.graph);
        let ok = self
            .graph
            .eigvals
            .iter()
            .all(|&l| 1.0 + self.c * l >= -POSITIVITY_SLACK);
        if !ok || !self.c.is_finite() {
            return Err(GraphError::PositivityViolated {
                c: self.c,
                c_min,
                c_max,
            });
        }
        Ok(())
    }

    pub fn gamma_matrix(&self) -> Mat<f64> {
        self.graph.gamma_matrix(self.gamma0, self.c)
    }
}

/// Largest interval of `c` with `1 + c λ >= 0` for every adjacency eigenvalue.
/// An empty graph yields `(-inf, +inf)`.
pub fn positivity_range(g: &NoiseGraph) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &l in &g.eigvals {
        if l > 0.0 {
            lo = lo.max(-1.0 / l);
        } else if l < 0.0 {
            hi = hi.min(-1.0 / l);
        }
    }
    (lo, hi)
}

/// `γ_α = γ₀(1 + c λ_α)` in ascending-eigenvalue order. Values within the
/// slack below zero are clamped to zero.
pub fn sector_rates(m: &CorrelationModel) -> Result<Vec<f64>, GraphError> {
    m.check_positivity()?;
    Ok(m.graph
        .eigvals
        .iter()
        .map(|&l| (m.gamma0 * (1.0 + m.c * l)).max(0.0))
        .collect())
}

/// Sectors whose rate falls below `tol · γ₀`.
pub fn protected_modes(m: &CorrelationModel, tol: f64) -> Vec<usize> {
    m.graph
        .eigvals
        .iter()
        .enumerate()
        .filter(|(_, &l)| m.gamma0 * (1.0 + m.c * l) < tol * m.gamma0)
        .map(|(a, _)| a)
        .collect()
}
