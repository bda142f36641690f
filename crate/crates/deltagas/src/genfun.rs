//! The generating function <exp(phi Q(x))> in the impenetrable, free and generic regimes.

use crate::densityfn::{DensitySolver, LorentzResolvent};
use crate::error::{Error, Result};
use crate::fredholm::{self, SeriesMode, SeriesResult};
use crate::grids::{default_scale, gauss_legendre, Closure, line_grid, ContourSpec, LineGrid, MapKind};
use crate::kernels::{kernel_v, matrix_m};
use crate::residue::phi_kernel;
use crate::thermo::{bose_weight, fermi_weight, Coupling, DressedEnergy, Energy, GasParams};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const GENERIC_MAX: usize = 3;
pub const DEFAULT_NODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "n_max")]
pub enum ImpenetrableMethod {
    Nystrom,
    Series(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "n_max")]
pub enum FreeMethod {
    PermSeries(usize),
    Resolvent,
}

/// A value of the generating function with the per-order terms when a series was summed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub method: String,
    #[serde(serialize_with = "crate::format::ser_complex_vec")]
    pub terms: Vec<C64>,
    #[serde(serialize_with = "crate::format::ser_complex")]
    pub total: C64,
    pub tail_estimate: f64,
}

impl Evaluation {
    fn closed(method: &str, total: C64) -> Self {
        Evaluation { method: method.into(), terms: Vec::new(), total, tail_estimate: 0.0 }
    }

    fn series(method: &str, s: SeriesResult) -> Self {
        Evaluation { method: method.into(), terms: s.terms, total: s.total, tail_estimate: s.tail_estimate }
    }
}

/// e^phi - 1 without cancellation for small phi.
pub fn expm1_c(phi: C64) -> C64 {
    let h = (0.5 * phi.im).sin();
    let rot = C64::new(-2.0 * h * h, phi.im.sin());
    C64::new(phi.re.exp_m1(), 0.0) * C64::from_polar(1.0, phi.im) + rot
}

fn lambda_2pi(phi: C64) -> C64 {
    expm1_c(phi) / (2.0 * PI)
}

/// Default quadrature for the limit regimes: Gauss-Legendre panels on the thermal window.
pub fn limit_grid(t: f64, mu: f64, nodes: usize) -> Result<LineGrid> {
    line_grid(nodes, default_scale(t, mu), MapKind::TruncatedWindow)
}

fn check_point(t: f64, mu: f64, x: f64, phi: C64) -> Result<()> {
    GasParams::new(Coupling::Impenetrable, t, mu)?;
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Param(format!("x must be finite and non-negative, got {x}")));
    }
    if !(phi.re.is_finite() && phi.im.is_finite()) {
        return Err(Error::Param(format!("phi must be finite, got {phi}")));
    }
    Ok(())
}

pub fn fermi_kernel(t: f64, mu: f64, x: f64) -> impl Fn(f64, f64) -> f64 {
    move |u, v| {
        let f = |p: f64| fermi_weight(Energy::Bare { mu }, t, p);
        f(u).sqrt() * kernel_v(u, v, x) * f(v).sqrt()
    }
}

pub fn bose_kernel(params: GasParams, x: f64) -> Result<impl Fn(f64, f64) -> f64> {
    params.require_bose_range()?;
    Ok(move |u: f64, v: f64| {
        let b = |p: f64| bose_weight(&params, p).unwrap_or(0.0);
        b(u).sqrt() * kernel_v(u, v, x) * b(v).sqrt()
    })
}

/// det(1 + (e^phi - 1)/2pi V_F) by Nystrom or by its truncated series.
pub fn genfun_impenetrable(t: f64, mu: f64, x: f64, phi: C64, method: ImpenetrableMethod, grid: &LineGrid) -> Result<Evaluation> {
    check_point(t, mu, x, phi)?;
    let k = fermi_kernel(t, mu, x);
    let lam = lambda_2pi(phi);
    match method {
        ImpenetrableMethod::Nystrom => Ok(Evaluation::closed("nystrom", fredholm::fredholm_det_nystrom(&k, lam, grid)?)),
        ImpenetrableMethod::Series(n) => {
            Ok(Evaluation::series("series", fredholm::fredholm_series(&k, lam, n, grid, SeriesMode::Determinant)?))
        }
    }
}

/// The free-boson permanent series or its resolvent sum 1/det(1 - lambda V_B).
pub fn genfun_free(t: f64, mu: f64, x: f64, phi: C64, method: FreeMethod, grid: &LineGrid) -> Result<Evaluation> {
    check_point(t, mu, x, phi)?;
    let params = GasParams::new(Coupling::Free, t, mu)?;
    let k = bose_kernel(params, x)?;
    let lam = lambda_2pi(phi);
    match method {
        FreeMethod::PermSeries(n) => {
            Ok(Evaluation::series("perm_series", fredholm::fredholm_series(&k, lam, n, grid, SeriesMode::Permanent)?))
        }
        FreeMethod::Resolvent => Ok(Evaluation::closed("resolvent", fredholm::permanent_resolvent_oracle(&k, lam, grid)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericEngine {
    /// q-integrals by residues, k-integrals through the density-function resolvent.
    Residue,
    /// Direct quadrature on the shifted contour with G solved per q-node (orders <= 1).
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenericOptions {
    pub engine: GenericEngine,
    /// Global Gauss-Legendre nodes carrying the n = 2 tensor.
    pub coarse: usize,
    /// Nodes per dimension for the n = 3 tensor.
    pub coarse3: usize,
}

impl Default for GenericOptions {
    fn default() -> Self {
        GenericOptions { engine: GenericEngine::Residue, coarse: 24, coarse3: 8 }
    }
}

/// Weights, resolvent and node data shared by all orders at one (c, T, mu).
struct Assembly<'a> {
    grid: &'a LineGrid,
    c: f64,
    x: f64,
    ephi: C64,
    w_fine: Vec<f64>,
    resolvent: LorentzResolvent,
}

/// Coarse nodes with the matrix B(a, m) of the operator R = (1 - K)^{-1} in
/// the k variable, acting on functions sampled at the coarse nodes and
/// evaluated at the coarse nodes.
struct Coarse {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    w: Vec<f64>,
    b: DMatrix<f64>,
    grid: LineGrid,
}

impl<'a> Assembly<'a> {
    fn new(eps: &DressedEnergy, grid: &'a LineGrid, x: f64, ephi: C64) -> Result<Self> {
        if grid.panels().is_empty() {
            return Err(Error::Param("the generic regime needs a grid with finite support".into()));
        }
        let w_fine: Vec<f64> = grid.nodes.iter().map(|p| fermi_weight(Energy::Dressed(eps), eps.t, *p)).collect();
        let resolvent = LorentzResolvent::new(eps.c, w_fine.clone(), grid)?;
        Ok(Assembly { grid, c: eps.c, x, ephi, w_fine, resolvent })
    }

    /// Matrix taking coarse samples h(k_m) to fine samples of u = (1 - K)^{-1} h.
    fn lift(&self, coarse: &LineGrid) -> DMatrix<f64> {
        let nf = self.grid.len();
        let mut interp = DMatrix::zeros(nf, coarse.len());
        for (f, p) in self.grid.nodes.iter().enumerate() {
            for (m, v) in coarse.interp_weights(*p).unwrap_or_default() {
                interp[(f, m)] = v;
            }
        }
        self.resolvent.solve(&interp)
    }

    fn coarse(&self, eps: &DressedEnergy, n: usize) -> Result<Coarse> {
        let (lo, hi) = self.grid.support();
        let grid = gauss_legendre(n, lo, hi)?;
        let u = self.lift(&grid);
        let ku = self.resolvent.apply_kernel_at(&grid.nodes, &u);
        let b = DMatrix::identity(n, n) + ku;
        let w = grid.nodes.iter().map(|p| fermi_weight(Energy::Dressed(eps), eps.t, *p)).collect();
        Ok(Coarse { nodes: grid.nodes.clone(), weights: grid.weights.clone(), w, b, grid })
    }

    fn term1(&self, coarse: &Coarse) -> C64 {
        let u = self.lift(&coarse.grid);
        let ku = self.resolvent.apply_kernel_at(&self.grid.nodes, &u);
        let (c, x, e) = (self.c, self.x, self.ephi);
        let vals: Vec<C64> = (0..self.grid.len())
            .into_par_iter()
            .map(|f| {
                let p = self.grid.nodes[f];
                let mut psi = phi_kernel(&[p], &[p], c, x, e);
                for (m, k) in coarse.nodes.iter().enumerate() {
                    psi += phi_kernel(&[p], &[*k], c, x, e) * ku[(f, m)];
                }
                C64::from_polar(self.grid.weights[f] * self.w_fine[f] / (2.0 * PI), p * x) * psi
            })
            .collect();
        vals.iter().sum()
    }

    fn term2(&self, coarse: &Coarse) -> C64 {
        let n = coarse.nodes.len();
        let (c, x, e) = (self.c, self.x, self.ephi);
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let bm = &coarse.b;
        let psi: Vec<C64> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let pa = coarse.nodes[a];
                let pb = coarse.nodes[b];
                let mut acc = C64::new(0.0, 0.0);
                for &(m, m2) in &pairs {
                    let coef = bm[(a, m)] * bm[(b, m2)] - bm[(a, m2)] * bm[(b, m)];
                    if coef != 0.0 {
                        acc += phi_kernel(&[pa, pb], &[coarse.nodes[m], coarse.nodes[m2]], c, x, e) * coef;
                    }
                }
                acc
            })
            .collect();
        // ridge-free numerator s(a, b) = e^{i p_a x} Psi (p_a - p_b)^2 + c^2), zero on the diagonal
        let mut s = DMatrix::<C64>::zeros(n, n);
        for (&(a, b), v) in pairs.iter().zip(&psi) {
            let r = (coarse.nodes[a] - coarse.nodes[b]).powi(2) + c * c;
            s[(a, b)] = v * r * C64::from_polar(1.0, coarse.nodes[a] * x);
            s[(b, a)] = v * r * C64::from_polar(1.0, coarse.nodes[b] * x);
        }
        let interp: Vec<Vec<(usize, f64)>> =
            self.grid.nodes.iter().map(|p| coarse.grid.interp_weights(*p).unwrap_or_default()).collect();
        let mut total = C64::new(0.0, 0.0);
        for b in 0..n {
            let pb = coarse.nodes[b];
            let row = self.grid.lorentz_row(pb, c);
            let mut inner = C64::new(0.0, 0.0);
            for (f, wr) in row.iter().enumerate() {
                let sf: C64 = interp[f].iter().map(|(a, v)| s[(*a, b)] * *v).sum();
                inner += sf * (*wr * self.w_fine[f]);
            }
            inner *= PI / c;
            total += inner * C64::from_polar(coarse.weights[b] * coarse.w[b], pb * x);
        }
        total / (2.0 * (2.0 * PI).powi(2))
    }

    fn term3(&self, coarse: &Coarse) -> C64 {
        let n = coarse.nodes.len();
        let (c, x, e) = (self.c, self.x, self.ephi);
        let mut triples = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for d in b + 1..n {
                    triples.push([a, b, d]);
                }
            }
        }
        let bm = &coarse.b;
        let vals: Vec<C64> = triples
            .par_iter()
            .map(|t| {
                let p: Vec<f64> = t.iter().map(|i| coarse.nodes[*i]).collect();
                let mut acc = C64::new(0.0, 0.0);
                for m in &triples {
                    let sub = DMatrix::from_fn(3, 3, |j, l| bm[(t[j], m[l])]);
                    let coef = sub.determinant();
                    if coef != 0.0 {
                        let k: Vec<f64> = m.iter().map(|i| coarse.nodes[*i]).collect();
                        acc += phi_kernel(&p, &k, c, x, e) * coef;
                    }
                }
                let weight: f64 = t.iter().map(|i| coarse.weights[*i] * coarse.w[*i]).product();
                let phase: f64 = p.iter().sum::<f64>() * x;
                acc * C64::from_polar(weight, phase)
            })
            .collect();
        vals.iter().sum::<C64>() / (2.0 * PI).powi(3)
    }
}

fn check_generic(params: &GasParams, eps: &DressedEnergy, x: f64, phi: C64, n_max: usize, contour: &ContourSpec) -> Result<f64> {
    let c = params.c().ok_or_else(|| Error::Param("the generic regime needs a finite coupling".into()))?;
    if n_max > GENERIC_MAX {
        return Err(Error::Size(format!("generic series limited to n_max <= {GENERIC_MAX}, got {n_max}")));
    }
    contour.check_coupling(c)?;
    if !eps.converged {
        return Err(Error::Precondition(format!("dressed energy not converged (residual {:e})", eps.residual)));
    }
    if eps.c != c || eps.t != params.t || eps.mu != params.mu {
        return Err(Error::Param("dressed energy was solved for different parameters".into()));
    }
    check_point(params.t, params.mu, x, phi)?;
    Ok(c)
}

/// Truncated multiple-integral series at finite coupling, terms t_0..t_{n_max}.
pub fn genfun_generic(
    params: &GasParams,
    eps: &DressedEnergy,
    x: f64,
    phi: C64,
    n_max: usize,
    contour: &ContourSpec,
    grid: &LineGrid,
    opts: &GenericOptions,
) -> Result<SeriesResult> {
    check_generic(params, eps, x, phi, n_max, contour)?;
    let mut terms = vec![C64::new(1.0, 0.0)];
    if n_max == 0 {
        return Ok(SeriesResult::from_terms(terms));
    }
    match opts.engine {
        GenericEngine::Residue => {
            let asm = Assembly::new(eps, grid, x, phi.exp())?;
            let coarse = asm.coarse(eps, opts.coarse)?;
            terms.push(asm.term1(&coarse));
            if n_max >= 2 {
                terms.push(asm.term2(&coarse));
            }
            if n_max >= 3 {
                let c3 = asm.coarse(eps, opts.coarse3)?;
                terms.push(asm.term3(&c3));
            }
        }
        GenericEngine::Contour => {
            if n_max > 1 {
                return Err(Error::Unsupported("the contour engine evaluates orders n <= 1".into()));
            }
            terms.push(contour_term1(params, eps, x, phi, contour, grid)?);
        }
    }
    Ok(SeriesResult::from_terms(terms))
}

/// t_1 at phi = 0, reported as a diagnostic.
pub fn generic_t1_at_phi_zero(params: &GasParams, eps: &DressedEnergy, x: f64, grid: &LineGrid, opts: &GenericOptions) -> Result<C64> {
    if params.c() != Some(eps.c) || eps.t != params.t || eps.mu != params.mu {
        return Err(Error::Param("dressed energy was solved for different parameters".into()));
    }
    let asm = Assembly::new(eps, grid, x, C64::new(1.0, 0.0))?;
    let coarse = asm.coarse(eps, opts.coarse)?;
    Ok(asm.term1(&coarse))
}

/// t_1 = int dp/2pi e^{ipx} w(p) int_{R+i delta} dq/2pi e^{-iqx} (p-q-ic)/(-ic) M(p,q) G(p,q).
pub fn contour_term1(params: &GasParams, eps: &DressedEnergy, x: f64, phi: C64, contour: &ContourSpec, grid: &LineGrid) -> Result<C64> {
    let c = check_generic(params, eps, x, phi, 1, contour)?;
    let solver = DensitySolver::new(params, eps, grid)?;
    let w: Vec<f64> = grid.nodes.iter().map(|p| fermi_weight(Energy::Dressed(eps), eps.t, *p)).collect();
    let ic = C64::new(0.0, c);
    let integrand = |q: C64| -> C64 {
        let table = match solver.solve(q) {
            Ok(t) => t,
            Err(_) => return C64::new(f64::NAN, 0.0),
        };
        let mut acc = C64::new(0.0, 0.0);
        for (i, p) in grid.nodes.iter().enumerate() {
            let m = match matrix_m(&[*p], &[q], phi, c) {
                Ok(m) => m.entries[(0, 0)],
                Err(_) => return C64::new(f64::NAN, 0.0),
            };
            let pre = (C64::new(*p, 0.0) - q - ic) / (-ic);
            acc += C64::from_polar(grid.weights[i] * w[i], p * x) * pre * m * table.values[i];
        }
        acc * (C64::new(0.0, -x) * q).exp() / (4.0 * PI * PI)
    };
    let (lo, hi) = grid.support();
    if contour.window <= lo.abs().max(hi.abs()) {
        return Err(Error::Contour(format!("contour window {} must enclose the grid support", contour.window)));
    }
    // the integrand is analytic below the line beyond the support and decays like e^{-x |Im q|}
    let res = crate::grids::contour_integral(integrand, contour, Closure::Down(x))?;
    if !res.value.re.is_finite() || !res.value.im.is_finite() {
        return Err(Error::Numerical("contour quadrature hit a pole".into()));
    }
    Ok(res.value)
}
