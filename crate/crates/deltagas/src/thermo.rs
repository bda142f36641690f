//! Yang-Yang dressed energy and the statistical weights.

use crate::error::{param, Error, Result};
use crate::grids::{default_scale, line_grid, LineGrid, MapKind};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "c")]
pub enum Coupling {
    Finite(f64),
    Impenetrable,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasParams {
    pub coupling: Coupling,
    #[serde(rename = "T")]
    pub t: f64,
    pub mu: f64,
}

impl GasParams {
    pub fn new(coupling: Coupling, t: f64, mu: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return param(format!("temperature must be positive, got {t}"));
        }
        if !mu.is_finite() {
            return param(format!("chemical potential must be finite, got {mu}"));
        }
        if let Coupling::Finite(c) = coupling {
            if !(c > 0.0 && c.is_finite()) {
                return param(format!("coupling must be positive, got {c}"));
            }
        }
        Ok(GasParams { coupling, t, mu })
    }

    pub fn finite(c: f64, t: f64, mu: f64) -> Result<Self> {
        Self::new(Coupling::Finite(c), t, mu)
    }

    pub fn c(&self) -> Option<f64> {
        match self.coupling {
            Coupling::Finite(c) => Some(c),
            _ => None,
        }
    }

    /// Guard for any integral over the Bose weight.
    pub fn require_bose_range(&self) -> Result<()> {
        if self.mu < 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "the chemical potential must be restricted to the physical range mu < 0 for the Bose weight, got mu = {}",
                self.mu
            )))
        }
    }
}

/// ln(1 + e^{-y}) without overflow.
pub fn softplus_neg(y: f64) -> f64 {
    if y > 0.0 {
        (-y).exp().ln_1p()
    } else {
        -y + y.exp().ln_1p()
    }
}

/// 1/(1 + e^{y}) without overflow.
pub fn logistic_neg(y: f64) -> f64 {
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedEnergy {
    pub grid: LineGrid,
    pub values: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub mu: f64,
    pub t: f64,
    pub c: f64,
}

impl DressedEnergy {
    /// Interpolated dressed energy; bare dispersion p^2 - mu outside the grid support.
    pub fn eval(&self, p: f64) -> f64 {
        self.grid
            .interpolate(&self.values, p)
            .unwrap_or(p * p - self.mu)
    }
}

/// Source of the energy entering the Fermi-type weight.
#[derive(Debug, Clone, Copy)]
pub enum Energy<'a> {
    Dressed(&'a DressedEnergy),
    /// Explicit impenetrable limit, epsilon = p^2 - mu.
    Bare { mu: f64 },
}

impl Energy<'_> {
    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Energy::Dressed(e) => e.eval(p),
            Energy::Bare { mu } => p * p - mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-12, max_iter: 20_000, damping: 0.5 }
    }
}

pub fn default_tba_grid(t: f64, mu: f64, nodes: usize) -> Result<LineGrid> {
    line_grid(nodes, default_scale(t, mu), MapKind::TruncatedWindow)
}

pub fn solve_dressed_energy(params: &GasParams, grid: &LineGrid, tol: f64, max_iter: usize) -> Result<DressedEnergy> {
    solve_dressed_energy_with(params, grid, SolveOptions { tol, max_iter, ..Default::default() })
}

/// Damped fixed-point iteration for
/// eps(p) = p^2 - mu - T int dq/pi c/((p-q)^2+c^2) ln(1 + e^{-eps(q)/T}).
pub fn solve_dressed_energy_with(params: &GasParams, grid: &LineGrid, opts: SolveOptions) -> Result<DressedEnergy> {
    let c = params.c().ok_or_else(|| Error::Param("the dressed energy is solved for finite coupling only".into()))?;
    if !(opts.tol > 0.0) {
        return param("tolerance must be positive");
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return param("damping must lie in (0, 1]");
    }
    if opts.max_iter == 0 {
        return param("max_iter must be positive");
    }
    let (t, mu) = (params.t, params.mu);
    let kern = grid.lorentz_matrix(&grid.nodes, c);
    let bare: Vec<f64> = grid.nodes.iter().map(|p| p * p - mu).collect();
    let mut eps = bare.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let n = grid.len();
    let mut lg = vec![0.0; n];
    while iterations < opts.max_iter {
        iterations += 1;
        for (l, e) in lg.iter_mut().zip(&eps) {
            *l = softplus_neg(e / t);
        }
        let mut upd = 0.0f64;
        for i in 0..n {
            let conv: f64 = (0..n).map(|f| kern[(i, f)] * lg[f]).sum();
            let rhs = bare[i] - t * conv;
            let next = (1.0 - opts.damping) * eps[i] + opts.damping * rhs;
            upd = upd.max((next - eps[i]).abs());
            eps[i] = next;
        }
        residual = upd;
        if residual <= opts.tol {
            break;
        }
    }
    Ok(DressedEnergy {
        grid: grid.clone(),
        values: eps,
        residual,
        converged: residual <= opts.tol,
        iterations,
        mu,
        t,
        c,
    })
}

/// 1/(1 + e^{eps(p)/T}).
pub fn fermi_weight(energy: Energy<'_>, t: f64, p: f64) -> f64 {
    logistic_neg(energy.eval(p) / t)
}

/// b(p) = 1/(e^{(p^2 - mu)/T} - 1), defined for mu < 0.
pub fn bose_weight(params: &GasParams, p: f64) -> Result<f64> {
    params.require_bose_range()?;
    Ok(1.0 / ((p * p - params.mu) / params.t).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert!((softplus_neg(800.0)).abs() < 1e-300);
        assert!((softplus_neg(-800.0) - 800.0).abs() < 1e-12);
        assert!((softplus_neg(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((logistic_neg(-800.0) - 1.0).abs() < 1e-15);
        assert_eq!(logistic_neg(800.0), 0.0);
    }

    #[test]
    fn bare_energy_gives_half_at_fermi_point() {
        assert!((fermi_weight(Energy::Bare { mu: 2.0 }, 0.7, 2f64.sqrt()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bose_weight_requires_negative_mu() {
        let p = GasParams::new(Coupling::Free, 1.0, 0.0).unwrap();
        assert!(matches!(bose_weight(&p, 1.0), Err(Error::Domain(_))));
    }
}
