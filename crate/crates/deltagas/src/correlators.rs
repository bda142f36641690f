//! Density and density-density correlators in the limit regimes, plus
//! finite-difference diagnostics at generic coupling.

use crate::error::{Error, Result};
use crate::genfun::{genfun_generic, limit_grid, GenericOptions};
use crate::grids::{ContourSpec, LineGrid};
use crate::thermo::{bose_weight, fermi_weight, Coupling, DressedEnergy, Energy, GasParams};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

pub const CORRELATOR_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Generic,
    Impenetrable,
    Free,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Generic => "generic",
            Regime::Impenetrable => "impenetrable",
            Regime::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorResult {
    pub regime: Regime,
    pub x: f64,
    pub density: f64,
    pub g2: f64,
    pub connected: f64,
}

/// Occupation weights of a limit regime sampled on a grid.
struct Occupation {
    grid: LineGrid,
    w: Vec<f64>,
    sign: f64,
}

impl Occupation {
    fn new(regime: Regime, t: f64, mu: f64) -> Result<Self> {
        let grid = limit_grid(t, mu, CORRELATOR_NODES)?;
        let (w, sign) = match regime {
            Regime::Impenetrable => {
                GasParams::new(Coupling::Impenetrable, t, mu)?;
                (grid.nodes.iter().map(|p| fermi_weight(Energy::Bare { mu }, t, *p)).collect(), -1.0)
            }
            Regime::Free => {
                let params = GasParams::new(Coupling::Free, t, mu)?;
                (grid.nodes.iter().map(|p| bose_weight(&params, *p)).collect::<Result<Vec<_>>>()?, 1.0)
            }
            Regime::Generic => return Err(Error::Unsupported("closed forms exist only in the limit regimes".into())),
        };
        Ok(Occupation { grid, w, sign })
    }

    fn density(&self) -> f64 {
        self.grid.weights.iter().zip(&self.w).map(|(a, w)| a * w).sum::<f64>() / (2.0 * PI)
    }

    fn fourier(&self, x: f64) -> f64 {
        self.grid.nodes.iter().zip(&self.grid.weights).zip(&self.w).map(|((p, a), w)| a * w * (p * x).cos()).sum::<f64>()
            / (2.0 * PI)
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!("x must be finite, got {x}")))
    }
}

/// D = int dp/2pi w(p) with w the Fermi or Bose occupation.
pub fn density_closed(regime: Regime, t: f64, mu: f64) -> Result<f64> {
    Ok(Occupation::new(regime, t, mu)?.density())
}

/// D^2 -+ (int dp/2pi w(p) cos(px))^2.
pub fn g2_closed(regime: Regime, t: f64, mu: f64, x: f64) -> Result<f64> {
    check_x(x)?;
    let occ = Occupation::new(regime, t, mu)?;
    let d = occ.density();
    let f = occ.fourier(x);
    Ok(d * d + occ.sign * f * f)
}

pub fn correlators_closed(regime: Regime, t: f64, mu: f64, x: f64) -> Result<CorrelatorResult> {
    check_x(x)?;
    let occ = Occupation::new(regime, t, mu)?;
    let d = occ.density();
    let f = occ.fourier(x);
    let g2 = d * d + occ.sign * f * f;
    Ok(CorrelatorResult { regime, x, density: d, g2, connected: g2 - d * d })
}

/// Density from the x-derivative of the first series term and g2 from the
/// second x-derivative of the second term,
/// d^2/dx^2 [x^2 -+ 4 sin^2((p1-p2)x/2)/(p1-p2)^2] = 2 -+ 2 cos((p1-p2)x),
/// integrated on the tensor grid.
pub fn correlators_from_series(regime: Regime, t: f64, mu: f64, x: f64) -> Result<CorrelatorResult> {
    check_x(x)?;
    let occ = Occupation::new(regime, t, mu)?;
    let g = &occ.grid;
    // n = 1: (1/2pi) int w V(p,p) = x D, so its x-derivative is D
    let density = occ.density();
    let n = g.len();
    let mut c2 = 0.0;
    for i in 0..n {
        let ai = g.weights[i] * occ.w[i];
        let mut row = 0.0;
        for j in 0..n {
            let s = g.nodes[i] - g.nodes[j];
            row += g.weights[j] * occ.w[j] * (2.0 + occ.sign * 2.0 * (s * x).cos());
        }
        c2 += ai * row;
    }
    // d^2_phi (e^phi - 1)^2 = 2 at phi = 0 and g2 = (1/2) d^2_x d^2_phi <e^{phi Q}>
    let g2 = c2 / (2.0 * (2.0 * PI).powi(2));
    Ok(CorrelatorResult { regime, x, density, g2, connected: g2 - density * density })
}

pub const H_PHI: f64 = 1e-3;
pub const H_X: f64 = 1e-3;

/// Approximate correlators at finite coupling by differencing the truncated series
/// (complex step h_phi in phi, central step h_x in x).
pub fn correlators_generic_fd(
    params: &GasParams,
    eps: &DressedEnergy,
    x: f64,
    n_max: usize,
    grid: &LineGrid,
    opts: &GenericOptions,
) -> Result<CorrelatorResult> {
    let c = params.c().ok_or_else(|| Error::Param("the generic regime needs a finite coupling".into()))?;
    if !(x.is_finite() && x >= H_X) {
        return Err(Error::Param(format!("finite differences need x >= {H_X}, got {x}")));
    }
    let phi = C64::new(0.0, H_PHI);
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for (i, xi) in [x - H_X, x, x + H_X].into_iter().enumerate() {
        let spec = ContourSpec::default_for(c, xi)?;
        let base = genfun_generic(params, eps, xi, C64::new(0.0, 0.0), n_max, &spec, grid, opts)?.total;
        let f = genfun_generic(params, eps, xi, phi, n_max, &spec, grid, opts)?.total;
        d1[i] = f.im / H_PHI;
        d2[i] = 2.0 * (base.re - f.re) / (H_PHI * H_PHI);
    }
    let density = (d1[2] - d1[0]) / (2.0 * H_X);
    let g2 = 0.5 * (d2[2] - 2.0 * d2[1] + d2[0]) / (H_X * H_X);
    Ok(CorrelatorResult { regime: Regime::Generic, x, density, g2, connected: g2 - density * density })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antibunching_and_bunching_at_contact() {
        let d = density_closed(Regime::Impenetrable, 1.0, 0.0).unwrap();
        assert!(g2_closed(Regime::Impenetrable, 1.0, 0.0, 0.0).unwrap().abs() <= 1e-12 * d * d);
        let db = density_closed(Regime::Free, 1.0, -1.0).unwrap();
        assert!((g2_closed(Regime::Free, 1.0, -1.0, 0.0).unwrap() - 2.0 * db * db).abs() <= 1e-12 * db * db);
    }

    #[test]
    fn generic_has_no_closed_form() {
        assert!(matches!(density_closed(Regime::Generic, 1.0, 0.0), Err(Error::Unsupported(_))));
    }
}
