//! Numerical checkers for the algebraic identities behind the limit regimes.

use crate::error::{Error, Result};
use crate::genfun::{expm1_c, limit_grid};
use crate::grids::{contour_integral, Closure, ContourSpec, DEFAULT_CONTOUR_NODES, DEFAULT_CONTOUR_WINDOW};
use crate::kernels::kernel_v;
use crate::multilin::{det_of, permutation_sign, ryser};
use crate::thermo::{bose_weight, Coupling, GasParams};
use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

const MIN_GAP: f64 = 0.1;
const MAX_DRAWS: usize = 1000;
pub const SYMMETRIZATION_NODES: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub params: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: &'static str, params: String, residual: f64, tolerance: f64) -> Self {
        CheckResult { name, params, residual, tolerance, pass: residual <= tolerance }
    }
}

fn rel(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Two real sets of size n in [-2, 2] whose union has pairwise gaps >= 0.1.
pub fn draw_sets(n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let all: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ok = all.iter().tuple_combinations().all(|(a, b): (&f64, &f64)| (a - b).abs() >= MIN_GAP);
        if ok {
            return Ok((all[..n].to_vec(), all[n..].to_vec()));
        }
    }
    Err(Error::Numerical(format!("no collision-free draw of size {n} after {MAX_DRAWS} tries")))
}

fn check_size(n: usize, lo: usize, hi: usize, what: &str) -> Result<()> {
    if n < 1 || n > hi {
        return Err(Error::Size(format!("{what} is checked for n in {lo}..={hi}, got {n}")));
    }
    Ok(())
}

/// prod_a [prod_{b<a} (p_a - q_b + ic) prod_{b>a} (p_a - q_b)] / prod_{a<b} (p_b - p_a + ic).
fn ordered_product(p: &[f64], q: &[f64], c: f64) -> C64 {
    let n = p.len();
    let ic = C64::new(0.0, c);
    let mut num = C64::new(1.0, 0.0);
    let mut den = C64::new(1.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let d = C64::new(p[a] - q[b], 0.0);
            if b < a {
                num *= d + ic;
            } else if b > a {
                num *= d;
            }
            if a < b {
                den *= C64::new(p[b] - p[a], 0.0) + ic;
            }
        }
    }
    num / den
}

/// Antisymmetrised ordered products against the Cauchy-type determinant
/// det[1/((p_j - q_k)(p_j - q_k + ic))] with matching prefactors.
pub fn nicelemma_sides(p: &[f64], q: &[f64], c: f64) -> (C64, C64) {
    let n = p.len();
    let ic = C64::new(0.0, c);
    let mut pre = C64::new(1.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if a < b {
                pre *= q[b] - q[a];
            }
            if a != b {
                pre *= C64::new(p[a] - p[b], 0.0) + ic;
            }
        }
    }
    let sum: C64 = (0..n)
        .permutations(n)
        .map(|s| {
            let ps: Vec<f64> = s.iter().map(|i| p[*i]).collect();
            ordered_product(&ps, q, c) * permutation_sign(&s)
        })
        .sum();
    let mut prod = C64::new(1.0, 0.0);
    let m = DMatrix::from_fn(n, n, |j, k| {
        let d = C64::new(p[j] - q[k], 0.0);
        prod *= d * (d + ic);
        (d * (d + ic)).inv()
    });
    (pre * sum, prod * det_of(&m))
}

pub fn check_nicelemma(n: usize, c: f64, seed: u64) -> Result<f64> {
    check_size(n, 2, 4, "the antisymmetrisation identity")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Param(format!("c must be positive, got {c}")));
    }
    let (p, q) = draw_sets(n, seed)?;
    let (l, r) = nicelemma_sides(&p, &q, c);
    Ok(rel(l, r))
}

/// det[1/(p-q)^2] / det[1/(p-q)] against sum_sigma prod_a 1/(p_sigma(a) - q_a).
pub fn quotient_sides(p: &[f64], q: &[f64]) -> (f64, f64) {
    let n = p.len();
    let a = DMatrix::from_fn(n, n, |j, k| 1.0 / (p[j] - q[k]).powi(2));
    let b = DMatrix::from_fn(n, n, |j, k| 1.0 / (p[j] - q[k]));
    let sum: f64 = (0..n).permutations(n).map(|s| s.iter().enumerate().map(|(a, j)| 1.0 / (p[*j] - q[a])).product::<f64>()).sum();
    (det_of(&a) / det_of(&b), sum)
}

pub fn check_quotient_identity(n: usize, seed: u64) -> Result<f64> {
    check_size(n, 2, 5, "the quotient identity")?;
    let (p, q) = draw_sets(n, seed)?;
    let (l, r) = quotient_sides(&p, &q);
    Ok(rel(C64::new(l, 0.0), C64::new(r, 0.0)))
}

/// int_{R+i delta} dq/2pi e^{-iqx}/((u-q)(v-q)) by quadrature.
pub fn qint_numeric(u: f64, v: f64, x: f64, contour: &ContourSpec) -> Result<C64> {
    let f = |q: C64| (C64::new(0.0, -x) * q).exp() / ((C64::new(u, 0.0) - q) * (C64::new(v, 0.0) - q)) / (2.0 * PI);
    let window = contour.window.max(2.0 * u.abs().max(v.abs()) + 1.0);
    let spec = ContourSpec::new(contour.shift, window, contour.node_count)?;
    let closure = if x > 0.0 { Closure::Down(x) } else { Closure::Up(0.0) };
    Ok(contour_integral(f, &spec, closure)?.value)
}

/// -V(u,v) e^{-i(u+v)x/2}.
pub fn qint_closed(u: f64, v: f64, x: f64) -> C64 {
    -kernel_v(u, v, x) * C64::from_polar(1.0, -0.5 * (u + v) * x)
}

/// Absolute deviation, scaled by the closed form once it exceeds one.
pub fn check_qint(u: f64, v: f64, x: f64, contour: &ContourSpec) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Param(format!("x must be non-negative, got {x}")));
    }
    let num = qint_numeric(u, v, x, contour)?;
    let exact = qint_closed(u, v, x);
    Ok((num - exact).norm() / exact.norm().max(1.0))
}

/// The n-th free-boson term on a tensor grid, once from the squared
/// permutation sum with numerical q-integrals and once from perm[V].
pub fn symmetrization_sides(n: usize, t: f64, mu: f64, x: f64, phi: f64, shift: f64, nodes: usize) -> Result<(C64, C64)> {
    let params = GasParams::new(Coupling::Free, t, mu)?;
    params.require_bose_range()?;
    let grid = limit_grid(t, mu, nodes)?;
    let m = grid.len();
    let b = grid.nodes.iter().map(|p| bose_weight(&params, *p)).collect::<Result<Vec<_>>>()?;
    let spec = ContourSpec::new(shift, DEFAULT_CONTOUR_WINDOW, DEFAULT_CONTOUR_NODES)?;
    let mut qtab = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = qint_numeric(grid.nodes[i], grid.nodes[j], x, &spec)?;
            qtab[(i, j)] = v;
            qtab[(j, i)] = v;
        }
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let mut fact = 1.0;
    for k in 1..=n {
        fact *= k as f64;
    }
    let lam = expm1_c(C64::new(phi, 0.0));
    let mut sq = C64::new(0.0, 0.0);
    let mut fac = C64::new(0.0, 0.0);
    for idx in (0..n).map(|_| 0..m).multi_cartesian_product() {
        let w: f64 = idx.iter().map(|i| grid.weights[*i] * b[*i] / (2.0 * PI)).product();
        if w == 0.0 {
            continue;
        }
        let phase: f64 = idx.iter().map(|i| grid.nodes[*i]).sum::<f64>() * x;
        let mut dbl = C64::new(0.0, 0.0);
        for s in &perms {
            for tau in &perms {
                dbl += (0..n).map(|a| qtab[(idx[s[a]], idx[tau[a]])]).product::<C64>();
            }
        }
        sq += dbl * C64::from_polar(w, phase);
        let v = DMatrix::from_fn(n, n, |j, k| kernel_v(grid.nodes[idx[j]], grid.nodes[idx[k]], x));
        fac += w * ryser(&v)?;
    }
    let sq = sq * (-lam).powu(n as u32) / (fact * fact);
    let fac = fac * lam.powu(n as u32) / fact;
    Ok((sq, fac))
}

pub fn check_symmetrization(n: usize, t: f64, mu: f64, x: f64, seed: u64) -> Result<f64> {
    check_size(n, 2, 3, "the symmetrisation")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = rng.random_range(-0.5..0.5);
    let shift = rng.random_range(0.2..1.0);
    let nodes = if n == 2 { SYMMETRIZATION_NODES } else { SYMMETRIZATION_NODES / 2 };
    let (a, b) = symmetrization_sides(n, t, mu, x, phi, shift, nodes)?;
    Ok(rel(a, b))
}

/// Tolerances of the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub nicelemma: f64,
    pub quotient: f64,
    pub qint: f64,
    pub symmetrization: f64,
}

impl Thresholds {
    pub fn standard() -> Self {
        Thresholds { nicelemma: 1e-7, quotient: 1e-7, qint: 1e-8, symmetrization: 1e-7 }
    }

    pub fn strict() -> Self {
        Thresholds { nicelemma: 1e-9, quotient: 1e-10, qint: 1e-8, symmetrization: 1e-7 }
    }

    pub fn scaled(self, f: f64) -> Self {
        Thresholds {
            nicelemma: self.nicelemma * f,
            quotient: self.quotient * f,
            qint: self.qint * f,
            symmetrization: self.symmetrization * f,
        }
    }
}

fn worst(vals: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut w = 0.0f64;
    for v in vals {
        let v = v?;
        w = if v.is_nan() { f64::NAN } else { w.max(v) };
    }
    Ok(w)
}

/// The four checks over a range of seeds, one result per check with the worst residual.
pub fn run_suite(seeds: u64, tol: &Thresholds) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let nl = worst((2..=4).flat_map(|n| [1.0, 1e-3].into_iter().flat_map(move |c| (0..seeds).map(move |s| check_nicelemma(n, c, s)))))?;
    out.push(CheckResult::new("nicelemma", format!("n=2..4 c=1|1e-3 seeds={seeds}"), nl, tol.nicelemma));
    let qi = worst((2..=5).flat_map(|n| (0..seeds).map(move |s| check_quotient_identity(n, s))))?;
    out.push(CheckResult::new("quotient_identity", format!("n=2..5 seeds={seeds}"), qi, tol.quotient));
    let qc = worst((0..seeds).map(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let u = rng.random_range(-2.0..2.0);
        let v = rng.random_range(-2.0..2.0);
        let x = rng.random_range(0.1..3.0);
        check_qint(u, v, x, &ContourSpec::default_for(f64::INFINITY, x)?)
    }))?;
    out.push(CheckResult::new("qint", format!("u|v in [-2;2] x in [0.1;3] seeds={seeds}"), qc, tol.qint));
    let sym = worst((2..=3).flat_map(|n| (0..seeds).map(move |s| check_symmetrization(n, 1.0, -1.0, 1.0, s))))?;
    out.push(CheckResult::new("symmetrization", format!("n=2..3 T=1 mu=-1 x=1 seeds={seeds}"), sym, tol.symmetrization));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_cases() {
        let (l, r) = nicelemma_sides(&[0.3], &[-0.9], 0.7);
        assert!(rel(l, r) <= 1e-14);
        let (a, b) = quotient_sides(&[0.3], &[-0.9]);
        assert!((a - b).abs() <= 1e-15 * a.abs());
    }

    #[test]
    fn symmetric_quotient_configuration() {
        let (a, b) = quotient_sides(&[-1.0, 1.0], &[-2.0, 2.0]);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn qint_examples() {
        let spec = ContourSpec::default_for(f64::INFINITY, 1.0).unwrap();
        assert!(check_qint(0.0, 0.0, 1.0, &spec).unwrap() <= 1e-8);
        let spec = ContourSpec::default_for(f64::INFINITY, PI).unwrap();
        assert!(check_qint(0.0, 1.0, PI, &spec).unwrap() <= 1e-8);
        let spec = ContourSpec::default_for(f64::INFINITY, 1e-6).unwrap();
        assert!(check_qint(0.3, -0.2, 1e-6, &spec).unwrap() <= 1e-8);
    }
}
