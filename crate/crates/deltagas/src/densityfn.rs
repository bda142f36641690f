//! The density function G(p,q) for q on the shifted contour.

use crate::error::{Error, Result};
use crate::grids::LineGrid;
use crate::thermo::{fermi_weight, DressedEnergy, Energy, GasParams};
use nalgebra::{DMatrix, LU};
use nalgebra::Dyn;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Resolvent (1 - K)^{-1} of the weighted Lorentzian operator
/// (K u)(p) = int dk/pi c/((p-k)^2+c^2) w(k) u(k), discretised with product weights.
#[derive(Debug, Clone)]
pub struct LorentzResolvent {
    pub grid: LineGrid,
    pub c: f64,
    /// Fermi-type weight w(k) at the grid nodes.
    pub weight: Vec<f64>,
    kern: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl LorentzResolvent {
    pub fn new(c: f64, weight: Vec<f64>, grid: &LineGrid) -> Result<Self> {
        let n = grid.len();
        if weight.len() != n {
            return Err(Error::Param("weight length must match the grid".into()));
        }
        let kern = grid.lorentz_matrix(&grid.nodes, c);
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - kern[(i, j)] * weight[j]);
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical("singular Nystrom matrix for the density function".into()));
        }
        Ok(LorentzResolvent { grid: grid.clone(), c, weight, kern, lu })
    }

    pub fn from_energy(eps: &DressedEnergy, grid: &LineGrid) -> Result<Self> {
        let w = grid.nodes.iter().map(|p| fermi_weight(Energy::Dressed(eps), eps.t, *p)).collect();
        Self::new(eps.c, w, grid)
    }

    /// Solve u - K u = f for every column of f given at the grid nodes.
    pub fn solve(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(f).expect("invertibility checked at construction")
    }

    /// (K u)(p) at arbitrary targets from nodal values of u.
    pub fn apply_kernel_at(&self, targets: &[f64], u: &DMatrix<f64>) -> DMatrix<f64> {
        let rows = self.grid.lorentz_matrix(targets, self.c);
        let wu = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| self.weight[i] * u[(i, j)]);
        rows * wu
    }

    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.kern
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityFnTable {
    pub p_grid: LineGrid,
    pub q_point: C64,
    pub values: Vec<C64>,
    /// Sup-norm residual of the discretised equation at the nodes.
    pub residual: f64,
}

/// Driving term -c/((p-q)(p-q-ic)).
pub fn driving_term(p: f64, q: C64, c: f64) -> C64 {
    let d = C64::new(p, 0.0) - q;
    -c / (d * (d - C64::new(0.0, c)))
}

/// Factored solver for G(., q) at many contour points q.
#[derive(Debug, Clone)]
pub struct DensitySolver {
    pub resolvent: LorentzResolvent,
}

impl DensitySolver {
    pub fn new(params: &GasParams, eps: &DressedEnergy, grid: &LineGrid) -> Result<Self> {
        let c = params.c().ok_or_else(|| Error::Param("the density function is solved for finite coupling".into()))?;
        if !eps.converged {
            return Err(Error::Precondition("dressed energy is not converged".into()));
        }
        if (c - eps.c).abs() > 0.0 {
            return Err(Error::Param("dressed energy was solved for a different coupling".into()));
        }
        Ok(DensitySolver { resolvent: LorentzResolvent::from_energy(eps, grid)? })
    }

    /// (K g)(p_i) with the rational part integrated exactly against the
    /// interpolated weight: partial fractions over the poles p +- ic, q, q + ic.
    fn kernel_on_driving(&self, q: C64) -> Vec<C64> {
        let r = &self.resolvent;
        let c = r.c;
        let ic = C64::new(0.0, c);
        r.grid
            .nodes
            .iter()
            .map(|p| {
                let z = [C64::new(*p, c), C64::new(*p, -c), q, q + ic];
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..4 {
                    let mut coef = C64::new(1.0, 0.0);
                    for b in 0..4 {
                        if a != b {
                            coef /= z[a] - z[b];
                        }
                    }
                    let mom: C64 = r.grid.cauchy_moments(z[a]).iter().zip(&r.weight).map(|(m, w)| *m * *w).sum();
                    acc += coef * mom;
                }
                acc * (-c * c / PI)
            })
            .collect()
    }

    pub fn solve(&self, q: C64) -> Result<DensityFnTable> {
        let (lo, hi) = self.resolvent.grid.support();
        if !(q.im > 0.0 || q.re < lo || q.re > hi) {
            return Err(Error::Domain(format!("q must lie above the real axis or outside the grid support, got {q}")));
        }
        let r = &self.resolvent;
        let n = r.grid.len();
        let kg = self.kernel_on_driving(q);
        let rhs = DMatrix::from_fn(n, 2, |i, j| if j == 0 { kg[i].re } else { kg[i].im });
        let h = r.solve(&rhs);
        let hv: Vec<C64> = (0..n).map(|i| C64::new(h[(i, 0)], h[(i, 1)])).collect();
        let kern = r.kernel_matrix();
        let mut residual = 0.0f64;
        for i in 0..n {
            let kh: C64 = (0..n).map(|f| hv[f] * (kern[(i, f)] * r.weight[f])).sum();
            residual = residual.max((hv[i] - kg[i] - kh).norm());
        }
        let values = r
            .grid
            .nodes
            .iter()
            .zip(&hv)
            .map(|(p, hi)| driving_term(*p, q, r.c) + hi)
            .collect();
        Ok(DensityFnTable { p_grid: r.grid.clone(), q_point: q, values, residual })
    }

    /// G(p, q) at an arbitrary real p through the Nystrom interpolation formula.
    pub fn eval(&self, table: &DensityFnTable, p: f64) -> C64 {
        let r = &self.resolvent;
        let q = table.q_point;
        let row = r.grid.lorentz_row(p, r.c);
        let rest: C64 = row
            .iter()
            .zip(&table.values)
            .zip(&r.grid.nodes)
            .zip(&r.weight)
            .map(|(((k, g), node), w)| (*g - driving_term(*node, q, r.c)) * (*k * *w))
            .sum();
        let z = [C64::new(p, r.c), C64::new(p, -r.c), q, q + C64::new(0.0, r.c)];
        let mut kg = C64::new(0.0, 0.0);
        for a in 0..4 {
            let mut coef = C64::new(1.0, 0.0);
            for b in 0..4 {
                if a != b {
                    coef /= z[a] - z[b];
                }
            }
            let mom: C64 = r.grid.cauchy_moments(z[a]).iter().zip(&r.weight).map(|(m, w)| *m * *w).sum();
            kg += coef * mom;
        }
        driving_term(p, q, r.c) + kg * (-r.c * r.c / PI) + rest
    }
}

pub fn solve_density_fn(params: &GasParams, eps: &DressedEnergy, q: C64, grid: &LineGrid) -> Result<DensityFnTable> {
    DensitySolver::new(params, eps, grid)?.solve(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Impenetrable,
    Free,
}

/// Explicit limits of G. The impenetrable limit returns -i/(p-q); the free limit
/// returns the ratio G/(-c) = 1/((p-q)^2 (1 - e^{-(p^2-mu)/T})), which is what
/// free-regime consumers use.
pub fn density_fn_limit(limit: Limit, params: &GasParams, p: f64, q: C64) -> Result<C64> {
    let d = C64::new(p, 0.0) - q;
    if d.norm() == 0.0 {
        return Err(Error::Pole(format!("p = q = {q}")));
    }
    match limit {
        Limit::Impenetrable => Ok(C64::new(0.0, -1.0) / d),
        Limit::Free => {
            params.require_bose_range()?;
            let occ = -(-(p * p - params.mu) / params.t).exp_m1();
            Ok(1.0 / (d * d * occ))
        }
    }
}

/// Column vector helper for callers holding real data.
pub fn column(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}
