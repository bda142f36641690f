use deltagas::fredholm::{fredholm_det_nystrom, fredholm_series, SeriesMode};
use deltagas::genfun::{expm1_c, fermi_kernel, genfun_impenetrable, limit_grid, ImpenetrableMethod};
use deltagas::grids::{contour_integral, contour_nodes, Closure, ContourSpec};
use deltagas::kernels::{kernel_v, matrix_m, KernelMatrix, Provenance};
use deltagas::multilin::{det_dense, det_of, permanent_ryser};
use deltagas::thermo::{default_tba_grid, solve_dressed_energy, solve_dressed_energy_with, GasParams, SolveOptions};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn two_node_contour() {
    let spec = ContourSpec::new(0.5, 1.0, 2).unwrap();
    let nodes = contour_nodes(&spec).unwrap();
    let r = 1.0 / 3f64.sqrt();
    assert!((nodes[0].0 - C64::new(-r, 0.5)).norm() < 1e-15);
    assert!((nodes[1].0 - C64::new(r, 0.5)).norm() < 1e-15);
}

#[test]
fn gaussian_on_shifted_line() {
    for delta in [0.3, 0.6] {
        let spec = ContourSpec::new(delta, 8.0, 256).unwrap();
        let r = contour_integral(|q| (-q * q).exp(), &spec, Closure::Truncate).unwrap();
        assert!(r.converged);
        assert!((r.value - PI.sqrt()).norm() <= 1e-12, "{}", r.value);
    }
}

#[test]
fn pole_free_strip_is_shift_independent() {
    let f = |q: C64| (q - C64::new(0.3, 2.0)).inv() * (q - C64::new(-0.7, -1.5)).inv();
    let at = |d: f64| contour_integral(f, &ContourSpec::new(d, 16.0, 256).unwrap(), Closure::Down(0.0)).unwrap().value;
    let (a, b) = (at(0.8), at(0.4));
    assert!((a - b).norm() <= 1e-8, "{a} vs {b}");
}

#[test]
fn damped_iteration_residual_never_grows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (c, t, mu) = (rng.random_range(0.1..10.0), rng.random_range(0.2..5.0), rng.random_range(-2.0..2.0));
        let params = GasParams::finite(c, t, mu).unwrap();
        let grid = default_tba_grid(t, mu, 48).unwrap();
        let mut prev = f64::INFINITY;
        for k in 2..16 {
            let opts = SolveOptions { tol: 1e-300, max_iter: k, ..Default::default() };
            let r = solve_dressed_energy_with(&params, &grid, opts).unwrap().residual;
            assert!(r <= prev * (1.0 + 1e-12), "c={c} T={t} mu={mu} step {k}: {r} > {prev}");
            prev = r;
        }
    }
}

#[test]
fn dressed_energy_is_grid_converged() {
    let params = GasParams::finite(1.0, 1.0, 1.0).unwrap();
    let tol = 1e-12;
    let at = |m| {
        let grid = default_tba_grid(1.0, 1.0, m).unwrap();
        solve_dressed_energy(&params, &grid, tol, 20_000).unwrap().eval(0.0)
    };
    let (a, b) = (at(128), at(256));
    assert!((a - b).abs() <= 10.0 * tol, "{a} vs {b}");
}

#[test]
fn v_kernel_is_smooth_across_the_diagonal() {
    for (u, x) in [(0.3, 1.0), (-1.2, 2.5)] {
        let d = kernel_v(u, u, x);
        for h in [1e-4, 1e-6, 1e-9] {
            let bound = x.powi(3) * h * h / 24.0 + 1e-15;
            assert!((kernel_v(u, u + h, x) - d).abs() <= bound, "u={u} x={x} h={h}");
        }
    }
}

#[test]
fn coupled_matrix_at_small_coupling() {
    let c = 1e-3;
    let phi = C64::new(0.4, 0.2);
    let p = [-0.6, 0.1, 0.9];
    let q = [C64::new(-0.2, 0.3), C64::new(0.5, 0.2), C64::new(1.4, 0.25)];
    let m = matrix_m(&p, &q, phi, c).unwrap();
    let i = C64::new(0.0, 1.0);
    for j in 0..3 {
        for k in 0..3 {
            let pj = C64::new(p[j], 0.0);
            let num: C64 = q.iter().map(|qa| pj - qa).product();
            let den: f64 = p.iter().enumerate().filter(|(a, _)| *a != j).map(|(_, pa)| p[j] - pa).product();
            let want = -i * expm1_c(phi) / (pj - q[k]).powu(2) * num / den;
            let got = m.entries[(j, k)];
            assert!((got - want).norm() <= 20.0 * c * want.norm(), "({j},{k}): {got} vs {want}");
        }
    }
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn perm_of(a: &DMatrix<C64>) -> C64 {
    permanent_ryser(&KernelMatrix::new(a.clone(), Provenance::Custom).unwrap()).unwrap()
}

#[test]
fn permanent_is_invariant_under_row_and_column_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..50 {
        let n = 1 + trial % 7;
        let a = random(n, &mut rng);
        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            rows.swap(k, rng.random_range(0..=k));
            cols.swap(k, rng.random_range(0..=k));
        }
        let b = DMatrix::from_fn(n, n, |i, j| a[(rows[i], cols[j])]);
        let (pa, pb) = (perm_of(&a), perm_of(&b));
        assert!((pa - pb).norm() <= 1e-12 * (1.0 + pa.norm()));
    }
}

#[test]
fn determinant_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 1..=6 {
        let (a, b) = (random(n, &mut rng), random(n, &mut rng));
        let lhs = det_of(&(&a * &b));
        let rhs = det_of(&a) * det_of(&b);
        assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm());
        let m = KernelMatrix::new(a.clone(), Provenance::Custom).unwrap();
        assert_eq!(det_dense(&m), det_of(&a));
    }
}

#[test]
fn permanent_of_diagonal_is_the_product() {
    let d = [C64::new(0.5, 1.0), C64::new(-2.0, 0.3), C64::new(1.5, -0.7), C64::new(0.9, 0.0)];
    let a = DMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { C64::new(0.0, 0.0) });
    let want: C64 = d.iter().product();
    assert!((perm_of(&a) - want).norm() <= 1e-15 * want.norm());
}

#[test]
fn nystrom_is_stable_under_grid_doubling() {
    let phi = C64::new(2f64.ln(), 0.0);
    for t in [0.5, 1.0, 2.0] {
        for mu in [-1.0, 0.0, 1.0] {
            let (g, g2) = (limit_grid(t, mu, 128).unwrap(), limit_grid(t, mu, 256).unwrap());
            for x in [0.5, 1.0, 2.0] {
                let a = genfun_impenetrable(t, mu, x, phi, ImpenetrableMethod::Nystrom, &g).unwrap().total;
                let b = genfun_impenetrable(t, mu, x, phi, ImpenetrableMethod::Nystrom, &g2).unwrap().total;
                assert!((a - b).norm() <= 1e-9, "T={t} mu={mu} x={x}");
            }
        }
    }
}

#[test]
fn flipping_kernel_and_lambda_sign_is_neutral() {
    let g = limit_grid(1.0, 0.0, 96).unwrap();
    let k = fermi_kernel(1.0, 0.0, 1.5);
    let neg = |u: f64, v: f64| -k(u, v);
    let lam = C64::new(0.3, 0.1);
    let a = fredholm_det_nystrom(&k, lam, &g).unwrap();
    let b = fredholm_det_nystrom(&neg, -lam, &g).unwrap();
    assert!((a - b).norm() <= 1e-14);
    let s = fredholm_series(&k, lam, 8, &g, SeriesMode::Determinant).unwrap().total;
    let sn = fredholm_series(&neg, -lam, 8, &g, SeriesMode::Determinant).unwrap().total;
    assert!((s - sn).norm() <= 1e-14);
}

#[test]
fn series_terms_decay() {
    let g = limit_grid(1.0, 0.0, 96).unwrap();
    let phi = C64::new(2f64.ln(), 0.0);
    for x in [0.5, 1.0, 2.0] {
        let terms = genfun_impenetrable(1.0, 0.0, x, phi, ImpenetrableMethod::Series(8), &g).unwrap().terms;
        for n in 2..8 {
            assert!(terms[n + 1].norm() < terms[n].norm(), "x={x} n={n}");
        }
    }
}
