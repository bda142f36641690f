//! Library results against independent oracles and frozen reference values.

use deltagas::correlators::{correlators_closed, density_closed, g2_closed, Regime};
use deltagas::densityfn::{density_fn_limit, DensitySolver, Limit};
use deltagas::genfun::{
    contour_term1, genfun_generic, genfun_impenetrable, limit_grid, GenericEngine, GenericOptions, ImpenetrableMethod,
};
use deltagas::grids::ContourSpec;
use deltagas::thermo::{default_tba_grid, solve_dressed_energy, Coupling, GasParams};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const EPS0_C1_T1_MU1: f64 = -2.063326230267696;
const NYSTROM_T1_MU0_X1_LN2: f64 = 1.172006939418285;
const DENSITY_IMPENETRABLE_T1_MU0: f64 = 0.17063875686032617;
const DENSITY_FREE_T1_MUM1: f64 = 0.14274846129686655;

/// Gauss-Legendre nodes and weights on [a, b] by Newton iteration on P_n.
fn gauss(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w)
        })
        .collect()
}

/// Composite rule of `panels` equal panels with `per` nodes each.
fn composite(panels: usize, per: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels).flat_map(|k| gauss(per, a + k as f64 * h, a + (k + 1) as f64 * h)).collect()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn ln1p_exp_neg(y: f64) -> f64 {
    if y > 0.0 {
        (-y).exp().ln_1p()
    } else {
        -y + y.exp().ln_1p()
    }
}

/// Dressed energy by plain Picard iteration on a fine composite rule; returns the
/// nodes with weights and the nodal values.
fn tba_oracle(c: f64, t: f64, mu: f64) -> (Vec<(f64, f64)>, Vec<f64>) {
    let rule = composite(60, 12, -12.0, 12.0);
    let bare: Vec<f64> = rule.iter().map(|(p, _)| p * p - mu).collect();
    let mut eps = bare.clone();
    for _ in 0..10_000 {
        let lg: Vec<f64> = eps.iter().map(|e| ln1p_exp_neg(e / t)).collect();
        let next: Vec<f64> = rule
            .iter()
            .zip(&bare)
            .map(|((p, _), b)| {
                let conv: f64 = rule.iter().zip(&lg).map(|((k, w), l)| w * c / ((p - k).powi(2) + c * c) * l).sum();
                b - t * conv / PI
            })
            .collect();
        let diff = next.iter().zip(&eps).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        eps = next;
        if diff < 1e-15 {
            break;
        }
    }
    (rule, eps)
}

fn tba_oracle_at(c: f64, t: f64, mu: f64, p: f64) -> f64 {
    let (rule, eps) = tba_oracle(c, t, mu);
    let conv: f64 = rule.iter().zip(&eps).map(|((k, w), e)| w * c / ((p - k).powi(2) + c * c) * ln1p_exp_neg(e / t)).sum();
    p * p - mu - t * conv / PI
}

#[test]
fn dressed_energy_at_origin_matches_fixed_point_oracle() {
    let oracle = tba_oracle_at(1.0, 1.0, 1.0, 0.0);
    assert!((oracle - EPS0_C1_T1_MU1).abs() <= 1e-12, "oracle drifted: {oracle}");
    let params = GasParams::finite(1.0, 1.0, 1.0).unwrap();
    let grid = default_tba_grid(1.0, 1.0, 128).unwrap();
    let eps = solve_dressed_energy(&params, &grid, 1e-13, 20_000).unwrap();
    assert!(eps.converged);
    assert!((eps.eval(0.0) - EPS0_C1_T1_MU1).abs() <= 1e-10, "{}", eps.eval(0.0));
}

#[test]
fn impenetrable_nystrom_regression() {
    let phi = C64::new(2f64.ln(), 0.0);
    let at = |m| {
        let g = limit_grid(1.0, 0.0, m).unwrap();
        genfun_impenetrable(1.0, 0.0, 1.0, phi, ImpenetrableMethod::Nystrom, &g).unwrap().total
    };
    let (a, b) = (at(128), at(256));
    assert!((a - b).norm() <= 1e-10);
    assert!(b.im.abs() <= 1e-14);
    assert!((b.re - NYSTROM_T1_MU0_X1_LN2).abs() <= 1e-10, "{}", b.re);
}

fn fermi(p: f64, mu: f64) -> f64 {
    1.0 / (1.0 + (p * p - mu).exp())
}

fn bose(p: f64, mu: f64) -> f64 {
    1.0 / (p * p - mu).exp_m1()
}

#[test]
fn densities_match_adaptive_quadrature() {
    let di = adaptive_simpson(&|p| fermi(p, 0.0) / (2.0 * PI), -40.0, 40.0, 1e-15);
    let db = adaptive_simpson(&|p| bose(p, -1.0) / (2.0 * PI), -40.0, 40.0, 1e-15);
    assert!((di - DENSITY_IMPENETRABLE_T1_MU0).abs() <= 1e-12, "oracle drifted: {di}");
    assert!((db - DENSITY_FREE_T1_MUM1).abs() <= 1e-12, "oracle drifted: {db}");
    let li = density_closed(Regime::Impenetrable, 1.0, 0.0).unwrap();
    let lb = density_closed(Regime::Free, 1.0, -1.0).unwrap();
    assert!((li - DENSITY_IMPENETRABLE_T1_MU0).abs() <= 1e-10 * li, "{li}");
    assert!((lb - DENSITY_FREE_T1_MUM1).abs() <= 1e-10 * lb, "{lb}");
}

#[test]
fn g2_matches_adaptive_quadrature() {
    for (regime, mu, sign) in [(Regime::Impenetrable, 0.0, -1.0), (Regime::Free, -1.0, 1.0)] {
        let w = move |p: f64| if sign < 0.0 { fermi(p, mu) } else { bose(p, mu) };
        let d = adaptive_simpson(&|p| w(p) / (2.0 * PI), -40.0, 40.0, 1e-15);
        for x in [0.3, 1.0, 2.5] {
            let f = adaptive_simpson(&|p| w(p) * (p * x).cos() / (2.0 * PI), -40.0, 40.0, 1e-15);
            let oracle = d * d + sign * f * f;
            let lib = g2_closed(regime, 1.0, mu, x).unwrap();
            assert!((lib - oracle).abs() <= 1e-10, "{regime:?} x={x}: {lib} vs {oracle}");
        }
    }
}

#[test]
fn boltzmann_tail() {
    let (t, mu) = (1.0, -30.0);
    let d = density_closed(Regime::Impenetrable, t, mu).unwrap();
    let tail = (mu / t).exp() * (PI * t).sqrt() / (2.0 * PI);
    assert!((d / tail - 1.0).abs() <= 0.01, "{d} vs {tail}");
}

#[test]
fn connected_correlator_decays() {
    for (regime, mu) in [(Regime::Impenetrable, 0.0), (Regime::Free, -1.0)] {
        let r = correlators_closed(regime, 1.0, mu, 20.0).unwrap();
        assert!(r.connected.abs() <= 1e-3 * r.density * r.density, "{regime:?}: {}", r.connected);
    }
}

/// G(p, q) by a plain Nystrom solve on the oracle rule.
fn density_fn_oracle(c: f64, t: f64, mu: f64, q: C64, targets: &[f64]) -> Vec<C64> {
    let (rule, eps) = tba_oracle(c, t, mu);
    let w: Vec<f64> = eps.iter().map(|e| 1.0 / (1.0 + (e / t).exp())).collect();
    let n = rule.len();
    let g = |p: f64| {
        let d = C64::new(p, 0.0) - q;
        -c / (d * (d - C64::new(0.0, c)))
    };
    let lor = |p: f64, k: f64| c / ((p - k).powi(2) + c * c) / PI;
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        C64::new(id - lor(rule[i].0, rule[j].0) * rule[j].1 * w[j], 0.0)
    });
    let rhs = nalgebra::DVector::from_fn(n, |i, _| g(rule[i].0));
    let sol = a.lu().solve(&rhs).unwrap();
    targets
        .iter()
        .map(|p| g(*p) + (0..n).map(|j| sol[j] * (lor(*p, rule[j].0) * rule[j].1 * w[j])).sum::<C64>())
        .collect()
}

#[test]
fn density_function_matches_plain_nystrom() {
    let (c, t, mu) = (1.0, 1.0, 1.0);
    let q = C64::new(0.3, 0.5);
    let targets = [-2.0, -0.7, 0.0, 0.4, 1.5];
    let oracle = density_fn_oracle(c, t, mu, q, &targets);
    let params = GasParams::finite(c, t, mu).unwrap();
    let grid = default_tba_grid(t, mu, 128).unwrap();
    let eps = solve_dressed_energy(&params, &grid, 1e-13, 20_000).unwrap();
    let solver = DensitySolver::new(&params, &eps, &grid).unwrap();
    let table = solver.solve(q).unwrap();
    assert!(table.residual <= 1e-12);
    for (p, o) in targets.iter().zip(&oracle) {
        let v = solver.eval(&table, *p);
        assert!((v - o).norm() <= 1e-8 * o.norm(), "p={p}: {v} vs {o}");
    }
}

#[test]
fn density_function_approaches_impenetrable_limit() {
    let (c, t, mu) = (1e4, 1.0, 1.0);
    let params = GasParams::finite(c, t, mu).unwrap();
    let grid = default_tba_grid(t, mu, 128).unwrap();
    let eps = solve_dressed_energy(&params, &grid, 1e-13, 20_000).unwrap();
    let solver = DensitySolver::new(&params, &eps, &grid).unwrap();
    let q = C64::new(0.2, 0.4);
    let table = solver.solve(q).unwrap();
    let lim = GasParams::new(Coupling::Impenetrable, t, mu).unwrap();
    for p in [-1.5, 0.0, 0.8] {
        let v = solver.eval(&table, p);
        let l = density_fn_limit(Limit::Impenetrable, &lim, p, q).unwrap();
        assert!((v - l).norm() <= 1e-3 * l.norm(), "p={p}: {v} vs {l}");
    }
}

fn generic_setup(c: f64, t: f64, mu: f64) -> (GasParams, deltagas::thermo::DressedEnergy) {
    let params = GasParams::finite(c, t, mu).unwrap();
    let grid = default_tba_grid(t, mu, 96).unwrap();
    let eps = solve_dressed_energy(&params, &grid, 1e-12, 20_000).unwrap();
    (params, eps)
}

#[test]
fn generic_series_is_real_for_real_phi() {
    let (params, eps) = generic_setup(2.0, 1.0, 0.0);
    let spec = ContourSpec::default_for(2.0, 1.0).unwrap();
    let opts = GenericOptions { coarse: 16, ..Default::default() };
    let s = genfun_generic(&params, &eps, 1.0, C64::new(0.4, 0.0), 2, &spec, &eps.grid, &opts).unwrap();
    for t in &s.terms {
        assert!(t.im.abs() <= 1e-9 * t.re.abs(), "{t}");
    }
}

#[test]
fn contour_engine_is_shift_independent_and_matches_residues() {
    let c = 1.0;
    let (params, eps) = generic_setup(c, 1.0, 0.0);
    let phi = C64::new(0.3, 0.0);
    let x = 0.8;
    let at = |delta: f64| {
        let spec = ContourSpec::new(delta, 16.0, 256).unwrap();
        contour_term1(&params, &eps, x, phi, &spec, &eps.grid).unwrap()
    };
    let (a, b) = (at(0.4), at(0.2));
    assert!((a - b).norm() <= 1e-8 * a.norm(), "{a} vs {b}");
    let spec = ContourSpec::default_for(c, x).unwrap();
    let opts = GenericOptions { engine: GenericEngine::Residue, coarse: 16, ..Default::default() };
    let r = genfun_generic(&params, &eps, x, phi, 1, &spec, &eps.grid, &opts).unwrap().terms[1];
    assert!((a - r).norm() <= 1e-6 * r.norm(), "contour {a} vs residue {r}");
}
