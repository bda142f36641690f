use deltagas::correlators::{correlators_closed, Regime};
use deltagas::format::num;
use deltagas::fredholm::{symmetric_polynomials, SeriesMode};
use deltagas::genfun::{expm1_c, genfun_impenetrable, limit_grid, ImpenetrableMethod};
use deltagas::kernels::{cauchy_det, KernelMatrix, Provenance};
use deltagas::multilin::{det_dense, permanent_bruteforce, permanent_ryser};
use deltagas::residue::phi_kernel;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn square(max: usize) -> impl Strategy<Value = Vec<Vec<C64>>> {
    (1..=max).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(complex(), n), n))
}

fn matrix(rows: &[Vec<C64>]) -> KernelMatrix {
    let n = rows.len();
    KernelMatrix::from_fn(n, Provenance::Custom, |j, k| rows[j][k])
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Point sets with pairwise gaps of at least 0.05.
fn separated(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, n).prop_filter("separated", |v| {
        v.iter().enumerate().all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).abs() >= 0.05))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ryser_agrees_with_expansion(rows in square(6)) {
        let m = matrix(&rows);
        prop_assert!(close(permanent_ryser(&m).unwrap(), permanent_bruteforce(&m).unwrap(), 1e-12));
    }

    #[test]
    fn permanent_ignores_row_order(rows in square(6), shift in 0usize..6) {
        let n = rows.len();
        let mut rolled = rows.clone();
        rolled.rotate_left(shift % n);
        let a = permanent_ryser(&matrix(&rows)).unwrap();
        let b = permanent_ryser(&matrix(&rolled)).unwrap();
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn permanent_and_determinant_of_transpose(rows in square(6)) {
        let n = rows.len();
        let m = matrix(&rows);
        let t = KernelMatrix::from_fn(n, Provenance::Custom, |j, k| rows[k][j]);
        prop_assert!(close(permanent_ryser(&m).unwrap(), permanent_ryser(&t).unwrap(), 1e-12));
        prop_assert!(close(det_dense(&m), det_dense(&t), 1e-12));
    }

    #[test]
    fn cauchy_product_form(
        pq in prop::collection::vec((complex(), complex()), 1..7).prop_filter("separated", |v| {
            v.iter().enumerate().all(|(i, a)| {
                v[i + 1..].iter().all(|b| (a.0 - b.0).norm() >= 0.1 && (a.1 - b.1).norm() >= 0.1)
                    && v.iter().all(|b| (a.0 - b.1).norm() >= 0.1)
            })
        }),
    ) {
        let n = pq.len();
        let p: Vec<C64> = pq.iter().map(|(a, _)| *a).collect();
        let q: Vec<C64> = pq.iter().map(|(_, b)| *b).collect();
        let m = KernelMatrix::from_fn(n, Provenance::Custom, |j, k| (p[j] - q[k]).inv());
        let d = det_dense(&m);
        prop_assert!((cauchy_det(&p, &q).unwrap() - d).norm() <= 1e-10 * d.norm());
    }

    #[test]
    fn elementary_symmetric_polynomials_expand_the_product(eta in prop::collection::vec(-1.0..1.0f64, 1..8), z in -1.0..1.0f64) {
        let e = symmetric_polynomials(&eta, eta.len(), SeriesMode::Determinant);
        let series: f64 = e.iter().enumerate().map(|(k, v)| v * z.powi(k as i32)).sum();
        let prod: f64 = eta.iter().map(|x| 1.0 + z * x).product();
        prop_assert!((series - prod).abs() <= 1e-12);
    }

    #[test]
    fn expm1_matches_exp(re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let z = C64::new(re, im);
        prop_assert!(close(expm1_c(z), z.exp() - 1.0, 1e-14));
    }

    #[test]
    fn numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = num(v);
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
        let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        prop_assert!(digits <= 17);
    }

    #[test]
    fn second_order_kernel_is_antisymmetric(p in separated(2), k in separated(2), c in 0.05..20.0f64, x in 0.0..3.0f64) {
        let e = C64::new(0.3, 0.1).exp();
        let a = phi_kernel(&p, &k, c, x, e);
        let ks = phi_kernel(&p, &[k[1], k[0]], c, x, e);
        let both = phi_kernel(&[p[1], p[0]], &[k[1], k[0]], c, x, e);
        let tol = 1e-9 * (1.0 + a.norm());
        prop_assert!((a + ks).norm() <= tol);
        prop_assert!((a - both).norm() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn impenetrable_reflects_conjugation(x in 0.0..3.0f64, re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let g = limit_grid(1.0, 0.0, 64).unwrap();
        let f = |phi| genfun_impenetrable(1.0, 0.0, x, phi, ImpenetrableMethod::Nystrom, &g).unwrap().total;
        let phi = C64::new(re, im);
        prop_assert!(close(f(phi.conj()), f(phi).conj(), 1e-13));
    }

    #[test]
    fn correlators_respect_statistics(t in 0.3..3.0f64, mu in -3.0..2.0f64, x in 0.0..5.0f64) {
        let r = correlators_closed(Regime::Impenetrable, t, mu, x).unwrap();
        let d2 = r.density * r.density;
        prop_assert!(r.g2 >= -1e-14 * d2 && r.g2 <= d2 * (1.0 + 1e-14));
        let mub = mu.min(-0.05);
        let b = correlators_closed(Regime::Free, t, mub, x).unwrap();
        let db2 = b.density * b.density;
        prop_assert!(b.g2 >= db2 * (1.0 - 1e-14) && b.g2 <= 2.0 * db2 * (1.0 + 1e-14));
    }
}
