//! Quadrature rules on intervals, on the real line and on shifted contours.
//!
//! Besides plain rules this module provides product-integration weights for
//! Cauchy kernels 1/(k - z) with z close to the real axis. These are what make
//! the Lorentzian kernels of the integral equations tractable when the coupling
//! c is much smaller than the node spacing.

use crate::error::{param, Error, Result};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Largest number of nodes per panel of a composite rule.
pub const PANEL_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    FiniteInterval,
    RationalMap,
    TruncatedWindow,
}

/// A contiguous block of Gauss-Legendre nodes on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub start: usize,
    pub len: usize,
}

impl Panel {
    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
    fn half(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub map_kind: MapKind,
    pub scale: f64,
    panels: Vec<Panel>,
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gl_reference(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, q) = legendre_pair(m, x);
            dp = mf * (x * p - q) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (p, q) = legendre_pair(m, x);
        dp = if (x * x - 1.0).abs() > 0.0 { mf * (x * p - q) / (x * x - 1.0) } else { dp };
        let wi = 2.0 / ((1.0 - x * x) * dp * dp);
        t[i] = -x;
        t[m - 1 - i] = x;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        t[m / 2] = 0.0;
    }
    (t, w)
}

fn legendre_pair(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn upsampled_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gl_reference(48))
}

/// Barycentric weights of Gauss-Legendre nodes from their quadrature weights.
fn gl_barycentric(t: &[f64], w: &[f64]) -> Vec<f64> {
    t.iter()
        .zip(w)
        .enumerate()
        .map(|(i, (ti, wi))| {
            let s = ((1.0 - ti * ti) * wi).sqrt();
            if i % 2 == 0 { s } else { -s }
        })
        .collect()
}

pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Result<LineGrid> {
    if m == 0 {
        return param("gauss_legendre needs at least one node");
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return param(format!("gauss_legendre needs finite a < b, got [{a}, {b}]"));
    }
    Ok(composite(a, b, &[m], MapKind::FiniteInterval, 0.5 * (b - a)))
}

fn composite(a: f64, b: f64, counts: &[usize], kind: MapKind, scale: f64) -> LineGrid {
    let np = counts.len();
    let width = (b - a) / np as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut panels = Vec::with_capacity(np);
    for (k, &m) in counts.iter().enumerate() {
        let lo = a + width * k as f64;
        let hi = if k + 1 == np { b } else { a + width * (k + 1) as f64 };
        let (t, w) = gl_reference(m);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        panels.push(Panel { lo, hi, start: nodes.len(), len: m });
        nodes.extend(t.iter().map(|ti| mid + half * ti));
        weights.extend(w.iter().map(|wi| half * wi));
    }
    LineGrid { nodes, weights, map_kind: kind, scale, panels }
}

/// Composite Gauss-Legendre rule on [a, b] with m nodes split into panels of at most
/// [`PANEL_NODES`] nodes.
pub fn panel_grid(m: usize, a: f64, b: f64) -> Result<LineGrid> {
    if m < 2 {
        return param("panel grid needs at least two nodes");
    }
    if !(a < b) {
        return param(format!("panel grid needs a < b, got [{a}, {b}]"));
    }
    let np = m.div_ceil(PANEL_NODES);
    let counts: Vec<usize> = (0..np).map(|k| m / np + usize::from(k < m % np)).collect();
    Ok(composite(a, b, &counts, MapKind::FiniteInterval, 0.5 * (b - a)))
}

/// Half width of the truncated window for a given scale.
pub fn window_half_width(scale: f64) -> f64 {
    (2.0 * scale).max(6.5)
}

/// Default scale sqrt(max(mu,0) + 10 T), so nodes cover the thermal Fermi surface.
pub fn default_scale(t: f64, mu: f64) -> f64 {
    (mu.max(0.0) + 10.0 * t).sqrt()
}

pub fn line_grid(m: usize, scale: f64, kind: MapKind) -> Result<LineGrid> {
    if m < 2 {
        return param("line_grid needs at least two nodes");
    }
    if !(scale.is_finite() && scale > 0.0) {
        return param(format!("line_grid scale must be positive, got {scale}"));
    }
    match kind {
        MapKind::FiniteInterval => {
            let mut g = panel_grid(m, -scale, scale)?;
            g.scale = scale;
            Ok(g)
        }
        MapKind::TruncatedWindow => {
            let lam = window_half_width(scale);
            let mut g = panel_grid(m, -lam, lam)?;
            g.map_kind = MapKind::TruncatedWindow;
            g.scale = scale;
            Ok(g)
        }
        MapKind::RationalMap => {
            let (t, w) = gl_reference(m);
            let nodes = t.iter().map(|ti| scale * ti / (1.0 - ti * ti)).collect();
            let weights = t
                .iter()
                .zip(&w)
                .map(|(ti, wi)| wi * scale * (1.0 + ti * ti) / (1.0 - ti * ti).powi(2))
                .collect();
            Ok(LineGrid { nodes, weights, map_kind: kind, scale, panels: Vec::new() })
        }
    }
}

impl LineGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Support [lo, hi] of a panel grid; the whole line for the rational map.
    pub fn support(&self) -> (f64, f64) {
        match (self.panels.first(), self.panels.last()) {
            (Some(a), Some(b)) => (a.lo, b.hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    pub fn integrate_c(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| f(*p) * *w).sum()
    }

    /// Interpolation weights at p as (node index, weight) pairs, or None outside the support.
    pub fn interp_weights(&self, p: f64) -> Option<Vec<(usize, f64)>> {
        if self.panels.is_empty() {
            let s = self.scale;
            let t = if p == 0.0 { 0.0 } else { 2.0 * p / (s + (s * s + 4.0 * p * p).sqrt()) };
            let (tr, wr) = gl_reference(self.len());
            return Some(barycentric_row(&tr, &gl_barycentric(&tr, &wr), t, 0));
        }
        let (lo, hi) = self.support();
        if !(p >= lo && p <= hi) {
            return None;
        }
        let k = self.panels.partition_point(|pan| pan.hi < p).min(self.panels.len() - 1);
        let pan = self.panels[k];
        let (t, w) = self.panel_reference(&pan);
        let b = gl_barycentric(&t, &w);
        Some(barycentric_row(&t, &b, (p - pan.mid()) / pan.half(), pan.start))
    }

    pub fn interpolate(&self, values: &[f64], p: f64) -> Option<f64> {
        self.interp_weights(p).map(|row| row.iter().map(|(i, w)| w * values[*i]).sum())
    }

    fn panel_reference(&self, pan: &Panel) -> (Vec<f64>, Vec<f64>) {
        let (mid, half) = (pan.mid(), pan.half());
        let r = pan.start..pan.start + pan.len;
        (
            self.nodes[r.clone()].iter().map(|k| (k - mid) / half).collect(),
            self.weights[r].iter().map(|w| w / half).collect(),
        )
    }

    /// Weights m_f with sum_f m_f h(k_f) ~ integral of h(k)/(k - z) over the grid support,
    /// exact for h polynomial on each panel. z must not lie on the support.
    pub fn cauchy_moments(&self, z: C64) -> Vec<C64> {
        if self.panels.is_empty() {
            return self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(k, w)| *w / (*k - z))
                .collect();
        }
        let mut out = Vec::with_capacity(self.len());
        for pan in &self.panels {
            let (t, w) = self.panel_reference(pan);
            let zeta = (z - pan.mid()) / pan.half();
            out.extend(panel_cauchy(&t, &w, zeta));
        }
        out
    }

    /// Row weights of the Lorentzian operator (c/pi) / ((p - k)^2 + c^2) at target p.
    pub fn lorentz_row(&self, p: f64, c: f64) -> Vec<f64> {
        if self.panels.is_empty() {
            return self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(k, w)| w * c / PI / ((p - k).powi(2) + c * c))
                .collect();
        }
        let z = C64::new(p, c);
        self.cauchy_moments(z).iter().map(|m| m.im / PI).collect()
    }

    pub fn lorentz_matrix(&self, targets: &[f64], c: f64) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(targets.len(), self.len());
        for (i, p) in targets.iter().enumerate() {
            for (f, v) in self.lorentz_row(*p, c).into_iter().enumerate() {
                m[(i, f)] = v;
            }
        }
        m
    }
}

fn barycentric_row(t: &[f64], b: &[f64], x: f64, offset: usize) -> Vec<(usize, f64)> {
    if let Some(i) = t.iter().position(|ti| *ti == x) {
        return vec![(offset + i, 1.0)];
    }
    let terms: Vec<f64> = t.iter().zip(b).map(|(ti, bi)| bi / (x - ti)).collect();
    let s: f64 = terms.iter().sum();
    terms.iter().enumerate().map(|(i, v)| (offset + i, v / s)).collect()
}

fn bernstein_radius(zeta: C64) -> f64 {
    let s = (zeta - 1.0).sqrt() * (zeta + 1.0).sqrt();
    (zeta + s).norm().max((zeta - s).norm())
}

fn panel_cauchy(t: &[f64], w: &[f64], zeta: C64) -> Vec<C64> {
    let m = t.len();
    let rho = bernstein_radius(zeta);
    let far = (39.0 / (2.0 * m as f64)).exp();
    if rho >= far {
        return t.iter().zip(w).map(|(ti, wi)| *wi / (*ti - zeta)).collect();
    }
    let b = gl_barycentric(t, w);
    if rho >= 1.5 {
        let (tu, wu) = upsampled_rule();
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (tr, wr) in tu.iter().zip(wu) {
            let k = *wr / (*tr - zeta);
            for (i, li) in barycentric_row(t, &b, *tr, 0) {
                out[i] += k * li;
            }
        }
        return out;
    }
    let terms: Vec<C64> = t.iter().zip(&b).map(|(ti, bi)| *bi / (zeta - *ti)).collect();
    let denom: C64 = terms.iter().sum();
    let log_int = (1.0 - zeta).ln() - (-1.0 - zeta).ln();
    let discrete: C64 = t.iter().zip(w).map(|(ti, wi)| *wi / (*ti - zeta)).sum();
    let gap = log_int - discrete;
    (0..m).map(|i| terms[i] / denom * gap + w[i] / (t[i] - zeta)).collect()
}

pub const DEFAULT_CONTOUR_WINDOW: f64 = 32.0;
pub const DEFAULT_CONTOUR_NODES: usize = 512;

/// Shifted integration contour R + i delta truncated to |Re q| <= window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub shift: f64,
    pub window: f64,
    pub node_count: usize,
}

impl ContourSpec {
    pub fn new(shift: f64, window: f64, node_count: usize) -> Result<Self> {
        let s = ContourSpec { shift, window, node_count };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shift > 0.0 && self.shift.is_finite()) {
            return Err(Error::Contour(format!("shift must be positive, got {}", self.shift)));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::Contour(format!("window must be positive, got {}", self.window)));
        }
        if self.node_count < 2 {
            return Err(Error::Contour("contour needs at least two nodes".into()));
        }
        Ok(())
    }

    /// Contour check against a finite coupling: the shift must stay below c.
    pub fn check_coupling(&self, c: f64) -> Result<()> {
        self.validate()?;
        if self.shift >= c {
            return Err(Error::Contour(format!(
                "contour shift {} must be smaller than the coupling c = {c}",
                self.shift
            )));
        }
        Ok(())
    }

    /// Default contour for a coupling and distance.
    pub fn default_for(c: f64, x: f64) -> Result<Self> {
        Self::new(Self::default_shift(c, x), DEFAULT_CONTOUR_WINDOW, DEFAULT_CONTOUR_NODES)
    }

    /// Default shift min(c/2, 1/(1+x)).
    pub fn default_shift(c: f64, x: f64) -> f64 {
        (0.5 * c).min(1.0 / (1.0 + x))
    }
}

pub fn contour_nodes(spec: &ContourSpec) -> Result<Vec<(C64, C64)>> {
    spec.validate()?;
    let g = panel_grid(spec.node_count, -spec.window, spec.window)?;
    Ok(g
        .nodes
        .iter()
        .zip(&g.weights)
        .map(|(t, w)| (C64::new(*t, spec.shift), C64::new(*w, 0.0)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourIntegral {
    #[serde(serialize_with = "crate::format::ser_complex")]
    pub value: C64,
    pub window: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

const LEG_NODES: usize = 64;
const MAX_DOUBLINGS: u32 = 10;

/// How the infinite tails of a contour integral are treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "rate")]
pub enum Closure {
    /// Plain truncation to the window.
    Truncate,
    /// The integrand is analytic below the line outside the window and decays like
    /// exp(-rate |Im q|) there (rate >= 0, algebraic decay at rate 0); the tails are
    /// closed along vertical rays Re q = +-window going down.
    Down(f64),
    /// As `Down`, closing upward.
    Up(f64),
}

/// Integral of f over R + i delta.
///
/// Closed tails remove the truncation error. The window is doubled until two
/// successive results agree to 1e-10 relative.
pub fn contour_integral(f: impl Fn(C64) -> C64, spec: &ContourSpec, closure: Closure) -> Result<ContourIntegral> {
    spec.validate()?;
    let one = |window: f64, nodes: usize| -> Result<C64> {
        // panels no wider than the shift resolve poles sitting on the real axis
        let resolved = PANEL_NODES * (2.0 * window / spec.shift).ceil() as usize;
        let s = ContourSpec { shift: spec.shift, window, node_count: nodes.max(resolved) };
        let mut acc: C64 = contour_nodes(&s)?.iter().map(|(q, w)| f(*q) * *w).sum();
        let (dir, rate) = match closure {
            Closure::Truncate => return Ok(acc),
            Closure::Down(r) => (-1.0, r),
            Closure::Up(r) => (1.0, r),
        };
        let (u, wu) = gl_reference(LEG_NODES);
        let sigma = 1.0 / (rate.abs() + 1.0 / window);
        let i = C64::new(0.0, 1.0);
        for (ui, wi) in u.iter().zip(&wu) {
            let v = 0.5 * (ui + 1.0);
            let s = sigma * v / (1.0 - v);
            let ds = 0.5 * wi * sigma / (1.0 - v).powi(2);
            let right = f(C64::new(window, spec.shift + dir * s));
            let left = f(C64::new(-window, spec.shift + dir * s));
            acc += (right - left) * i * (dir * ds);
        }
        Ok(acc)
    };
    let mut window = spec.window;
    let mut nodes = spec.node_count;
    let mut prev = one(window, nodes)?;
    for _ in 0..MAX_DOUBLINGS {
        window *= 2.0;
        nodes *= 2;
        let cur = one(window, nodes)?;
        let diff = (cur - prev).norm();
        if diff <= 1e-10 * cur.norm() || diff <= 1e-15 {
            return Ok(ContourIntegral { value: cur, window, error_estimate: diff, converged: true });
        }
        prev = cur;
    }
    let last = one(window * 2.0, nodes * 2)?;
    Ok(ContourIntegral {
        value: last,
        window: window * 2.0,
        error_estimate: (last - prev).norm(),
        converged: false,
    })
}
