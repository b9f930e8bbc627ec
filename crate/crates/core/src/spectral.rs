//! Perron-Frobenius data of `A_G^s`: the critical exponent `s₀` with
//! `ρ(A_G^{s₀}) = 1`, the normalized Perron vectors and the renewal limit
//! matrix.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{reachability, strongly_connected, MwGraph};

const POWER_REL_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 100_000;

/// `A_G^s`, entry `(i, j) = Σ_{e ∈ E_ij} r_e^s`.
pub fn build_matrix(graph: &MwGraph, s: f64) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut a = DMatrix::zeros(n, n);
    for e in &graph.edges {
        a[(e.from, e.to)] += e.ratio().powf(s);
    }
    a
}

/// Moment matrix `E`, `m_ij = Σ_{e ∈ E_ij} r_e^s log r_e^{-1}`.
pub fn moment_matrix(graph: &MwGraph, s: f64) -> DMatrix<f64> {
    let n = graph.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for e in &graph.edges {
        m[(e.from, e.to)] += e.ratio().powf(s) * (-e.ratio().ln());
    }
    m
}

pub fn is_irreducible(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let arcs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| a[(i, j)] > 0.0);
    n > 0 && reachability(n, arcs).iter().all(|row| row.iter().all(|&b| b))
}

/// Perron root with right and left eigenvectors, each positive and summing to one.
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub rho: f64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
}

/// Power iteration on `A + cI` with Collatz-Wielandt bracketing.
///
/// Returns `None` when the bracket fails to close (reducible input with
/// several Perron blocks, or a zero row).
fn power_iteration(a: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    let n = a.nrows();
    let row_sums: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let max_row = row_sums.iter().copied().fold(0.0, f64::max);
    if max_row == 0.0 {
        return Some((0.0, DVector::from_element(n, 1.0 / n as f64)));
    }
    let shift = 0.5 * max_row;
    let b = a + DMatrix::identity(n, n) * shift;
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_MAX_ITER {
        let y = &b * &x;
        if y.iter().any(|&t| !(t > 0.0)) {
            return None;
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let q = y[i] / x[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        let total = y.sum();
        x = y / total;
        if hi - lo <= POWER_REL_TOL * hi {
            return Some((0.5 * (lo + hi) - shift, x));
        }
    }
    None
}

fn dense_spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral radius of a nonnegative square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::InvalidInput("spectral radius needs a nonempty square matrix".into()));
    }
    if a.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput("matrix must be finite and nonnegative".into()));
    }
    Ok(match power_iteration(a) {
        Some((rho, _)) => rho,
        None => dense_spectral_radius(a),
    })
}

/// Perron root and vectors of an irreducible nonnegative matrix.
pub fn perron(a: &DMatrix<f64>) -> Result<PerronPair> {
    if !is_irreducible(a) {
        return Err(Error::NotStronglyConnected);
    }
    let (rho, right) = power_iteration(a).ok_or_else(|| Error::Numerical("power iteration did not converge".into()))?;
    let (_, left) =
        power_iteration(&a.transpose()).ok_or_else(|| Error::Numerical("power iteration did not converge".into()))?;
    Ok(PerronPair { rho, right, left })
}

/// Perron data at the critical exponent.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralData {
    pub s0: f64,
    /// Right Perron vector, `A_G^{s₀} u = u`.
    pub u: Vec<f64>,
    /// Left Perron vector, `vᵀ A_G^{s₀} = vᵀ`.
    pub v: Vec<f64>,
    /// `E`, first moments of `μ_ij`.
    pub moments: Vec<Vec<f64>>,
    /// `(vᵀ E u)⁻¹ u vᵀ`.
    pub limit: Vec<Vec<f64>>,
    /// `ρ(A_G^{s₀})` as actually attained.
    pub rho: f64,
}

impl SpectralData {
    pub fn u_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u)
    }

    pub fn v_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.v)
    }

    pub fn limit_matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.limit)
    }

    pub fn moment_matrix(&self) -> DMatrix<f64> {
        to_matrix(&self.moments)
    }
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Normalizes so that `𝟙ᵀv = 1` and `vᵀu = 1`.
pub fn normalize_perron(right: &DVector<f64>, left: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let v = left / left.sum();
    let u = right / v.dot(right);
    (u, v)
}

/// `(vᵀ E u)⁻¹ u vᵀ`.
pub fn limit_matrix(u: &DVector<f64>, v: &DVector<f64>, moments: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = v.dot(&(moments * u));
    u * v.transpose() / scale
}

/// Finds `s₀` by bisection on `s ↦ ρ(A_G^s)`, strictly decreasing.
pub fn solve_s0(graph: &MwGraph, tol: f64) -> Result<SpectralData> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !strongly_connected(graph) {
        return Err(Error::NotStronglyConnected);
    }
    let rho = |s: f64| spectral_radius(&build_matrix(graph, s));
    let rho0 = rho(0.0)?;
    if rho0 < 1.0 - tol {
        return Err(Error::Numerical(format!("ρ(A_G^0) = {rho0} < 1, no nonnegative root")));
    }
    let s0 = if (rho0 - 1.0).abs() <= tol {
        0.0
    } else {
        let mut hi = 1.0;
        while rho(hi)? >= 1.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Numerical("could not bracket s₀".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if rho(mid)? > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let a = build_matrix(graph, s0);
    let pair = perron(&a)?;
    if (pair.rho - 1.0).abs() > tol {
        return Err(Error::Numerical(format!("|ρ(A_G^s₀) − 1| = {:e} exceeds {tol:e}", (pair.rho - 1.0).abs())));
    }
    let (u, v) = normalize_perron(&pair.right, &pair.left);
    let moments = moment_matrix(graph, s0);
    let limit = limit_matrix(&u, &v, &moments);
    Ok(SpectralData {
        s0,
        u: u.iter().copied().collect(),
        v: v.iter().copied().collect(),
        moments: to_rows(&moments),
        limit: to_rows(&limit),
        rho: pair.rho,
    })
}
