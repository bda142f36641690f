//! Closed-form kernels and structured determinant factors.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    VF,
    VB,
    M,
    G,
    Custom,
}

/// Interval length and generating parameter of the average of e^{phi Q(x)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryPoint {
    pub x: f64,
    pub phi: C64,
}

impl QueryPoint {
    pub fn new(x: f64, phi: impl Into<C64>) -> Result<Self> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::Param(format!("x must be a non-negative real, got {x}")));
        }
        Ok(QueryPoint { x, phi: phi.into() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<C64>,
    pub provenance: Provenance,
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<C64>, provenance: Provenance) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Param(format!(
                "kernel matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(KernelMatrix { entries, provenance })
    }

    pub fn from_real(entries: &DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        Self::new(entries.map(|v| C64::new(v, 0.0)), provenance)
    }

    pub fn from_fn(n: usize, provenance: Provenance, f: impl Fn(usize, usize) -> C64) -> Self {
        KernelMatrix { entries: DMatrix::from_fn(n, n, f), provenance }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }
}

const SINC_SWITCH: f64 = 1e-6;

/// V(u,v) = 2 sin((u-v)x/2)/(u-v), continued by V(u,u) = x.
pub fn kernel_v(u: f64, v: f64, x: f64) -> f64 {
    let d = u - v;
    let h = 0.5 * d * x;
    if (d * x).abs() < SINC_SWITCH {
        x * (1.0 - h * h / 6.0)
    } else {
        2.0 * h.sin() / d
    }
}

pub fn kernel_vf(u: f64, v: f64, x: f64, weight: impl Fn(f64) -> f64) -> f64 {
    weight(u).sqrt() * kernel_v(u, v, x) * weight(v).sqrt()
}

pub fn kernel_vb(u: f64, v: f64, x: f64, weight: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    Ok(weight(u)?.sqrt() * kernel_v(u, v, x) * weight(v)?.sqrt())
}

fn collides(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-14 * (1.0 + a.norm().max(b.norm()))
}

/// Entries M(p_j, q_k) of the coupled matrix, with the l = k factors cancelled
/// against the prefactor poles.
pub fn matrix_m(p: &[f64], q: &[C64], phi: C64, c: f64) -> Result<KernelMatrix> {
    let n = p.len();
    if q.len() != n {
        return Err(Error::Param(format!("matrix_M needs equal set sizes, got {} and {}", n, q.len())));
    }
    if !(c > 0.0) {
        return Err(Error::Param(format!("matrix_M needs c > 0, got {c}")));
    }
    let ic = C64::new(0.0, c);
    for (j, pj) in p.iter().enumerate() {
        for (k, qk) in q.iter().enumerate() {
            let pj = C64::new(*pj, 0.0);
            for (shift, tag) in [(C64::new(0.0, 0.0), "q = p"), (ic, "q = p + ic"), (-ic, "q = p - ic")] {
                if collides(*qk, pj + shift) {
                    return Err(Error::Pole(format!("{tag} for p_{j} = {pj} and q_{k} = {qk}")));
                }
            }
        }
    }
    let ephi = phi.exp();
    let i = C64::new(0.0, 1.0);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let pj = C64::new(p[j], 0.0);
        let dp: C64 = p.iter().map(|pl| pj - pl + ic).product();
        let dm: C64 = p.iter().map(|pl| pj - pl - ic).product();
        for k in 0..n {
            let mut up = ic / dp;
            let mut dn = ic * ephi / dm;
            for (l, ql) in q.iter().enumerate() {
                if l != k {
                    up *= pj - ql + ic;
                    dn *= pj - ql - ic;
                }
            }
            m[(j, k)] = i / (pj - q[k]) * (up + dn);
        }
    }
    KernelMatrix::new(m, Provenance::M)
}

/// prod_{a<b} (p_a - p_b)(q_b - q_a) / prod_{a,b} (p_a - q_b).
pub fn cauchy_det(p: &[C64], q: &[C64]) -> Result<C64> {
    let n = p.len();
    if q.len() != n {
        return Err(Error::Param("cauchy_det needs equal set sizes".into()));
    }
    let mut num = C64::new(1.0, 0.0);
    let mut den = C64::new(1.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let d = p[a] - q[b];
            if d == C64::new(0.0, 0.0) {
                return Err(Error::Pole(format!("p_{a} = q_{b} = {}", p[a])));
            }
            den *= d;
            if a < b {
                num *= (p[a] - p[b]) * (q[b] - q[a]);
            }
        }
    }
    Ok(num / den)
}

/// prod_{j<k} (p_k - p_j).
pub fn vandermonde(p: &[C64]) -> C64 {
    let mut v = C64::new(1.0, 0.0);
    for j in 0..p.len() {
        for k in j + 1..p.len() {
            v *= p[k] - p[j];
        }
    }
    v
}
