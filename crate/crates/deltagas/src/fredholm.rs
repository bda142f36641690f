//! Fredholm determinants of symmetric kernels on the line and their series.

use crate::error::{Error, Result};
use crate::grids::LineGrid;
use crate::multilin::{bruteforce, det_of};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

pub const SERIES_MAX: usize = 8;
pub const TENSOR_MAX: usize = 3;
const RADIUS_LIMIT: f64 = 0.99;

/// Per-order terms t_0..t_{n_max} of a generating-function series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    #[serde(serialize_with = "crate::format::ser_complex_vec")]
    pub terms: Vec<C64>,
    #[serde(serialize_with = "crate::format::ser_complex")]
    pub total: C64,
    pub n_max: usize,
    pub tail_estimate: f64,
}

impl SeriesResult {
    pub fn from_terms(terms: Vec<C64>) -> Self {
        let total = terms.iter().sum();
        let n_max = terms.len().saturating_sub(1);
        let tail_estimate = if n_max == 0 { 0.0 } else { terms[n_max].norm() };
        SeriesResult { terms, total, n_max, tail_estimate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMode {
    Determinant,
    Permanent,
}

/// Symmetrised Nystrom matrix D^{1/2} K D^{1/2}.
pub fn weighted_matrix(kernel: &dyn Fn(f64, f64) -> f64, grid: &LineGrid) -> DMatrix<f64> {
    let n = grid.len();
    let s: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = s[i] * kernel(grid.nodes[i], grid.nodes[j]) * s[j];
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn identity_plus(a: &DMatrix<f64>, lambda: C64) -> DMatrix<C64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        C64::new(d, 0.0) + lambda * a[(i, j)]
    })
}

/// det(I + lambda D^{1/2} K D^{1/2}) by LU.
pub fn fredholm_det_nystrom(kernel: &dyn Fn(f64, f64) -> f64, lambda: C64, grid: &LineGrid) -> Result<C64> {
    let a = weighted_matrix(kernel, grid);
    Ok(det_of(&identity_plus(&a, lambda)))
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    a.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Elementary (determinant) or complete homogeneous (permanent) symmetric
/// polynomials of the eigenvalues up to order n_max.
pub fn symmetric_polynomials(eta: &[f64], n_max: usize, mode: SeriesMode) -> Vec<f64> {
    let mut s = vec![0.0; n_max + 1];
    s[0] = 1.0;
    for &e in eta {
        match mode {
            SeriesMode::Determinant => {
                for n in (1..=n_max).rev() {
                    s[n] += e * s[n - 1];
                }
            }
            SeriesMode::Permanent => {
                for n in 1..=n_max {
                    s[n] += e * s[n - 1];
                }
            }
        }
    }
    s
}

/// Terms t_n = lambda^n/n! int dp_1..dp_n det_or_perm[K(p_j,p_k)], evaluated exactly at
/// the discretised level through the eigenvalues of the weighted matrix.
pub fn fredholm_series(
    kernel: &dyn Fn(f64, f64) -> f64,
    lambda: C64,
    n_max: usize,
    grid: &LineGrid,
    mode: SeriesMode,
) -> Result<SeriesResult> {
    if n_max > SERIES_MAX {
        return Err(Error::Size(format!("series order limited to {SERIES_MAX}, got {n_max}")));
    }
    let eta = eigenvalues(&weighted_matrix(kernel, grid));
    let s = symmetric_polynomials(&eta, n_max, mode);
    let terms = s.iter().enumerate().map(|(n, v)| lambda.powu(n as u32) * *v).collect();
    Ok(SeriesResult::from_terms(terms))
}

/// The same terms by plain n-fold tensor quadrature; kept for cross-checks at n <= 3.
pub fn fredholm_series_tensor(
    kernel: &dyn Fn(f64, f64) -> f64,
    lambda: C64,
    n_max: usize,
    grid: &LineGrid,
    mode: SeriesMode,
) -> Result<SeriesResult> {
    if n_max > TENSOR_MAX {
        return Err(Error::Size(format!("tensor series limited to order {TENSOR_MAX}, got {n_max}")));
    }
    let m = grid.len();
    let kmat = DMatrix::from_fn(m, m, |i, j| kernel(grid.nodes[i], grid.nodes[j]));
    let mut terms = vec![C64::new(1.0, 0.0)];
    let mut fact = 1.0;
    for n in 1..=n_max {
        fact *= n as f64;
        let mut acc = 0.0;
        let mut idx = vec![0usize; n];
        loop {
            let w: f64 = idx.iter().map(|i| grid.weights[*i]).product();
            let sub = DMatrix::from_fn(n, n, |a, b| kmat[(idx[a], idx[b])]);
            let v = match mode {
                SeriesMode::Determinant => det_of(&sub),
                SeriesMode::Permanent => bruteforce(&sub)?,
            };
            acc += w * v;
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        terms.push(lambda.powu(n as u32) * acc / fact);
    }
    Ok(SeriesResult::from_terms(terms))
}

pub fn spectral_radius(kernel: &dyn Fn(f64, f64) -> f64, lambda: C64, grid: &LineGrid) -> f64 {
    let eta = eigenvalues(&weighted_matrix(kernel, grid));
    lambda.norm() * eta.iter().fold(0.0f64, |m, e| m.max(e.abs()))
}

/// 1/det(I - lambda D^{1/2} K D^{1/2}), the sum of the permanent series when it converges.
pub fn permanent_resolvent_oracle(kernel: &dyn Fn(f64, f64) -> f64, lambda: C64, grid: &LineGrid) -> Result<C64> {
    let a = weighted_matrix(kernel, grid);
    let eta = eigenvalues(&a);
    let radius = lambda.norm() * eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if radius >= RADIUS_LIMIT {
        return Err(Error::Divergence { radius });
    }
    Ok(det_of(&identity_plus(&a, -lambda)).inv())
}
