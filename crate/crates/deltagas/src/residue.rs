//! Exact evaluation of the contour integrals over q_1..q_n by iterated residues.
//!
//! For real p_1..p_n and real k_1..k_n the integrand
//!
//!   prod_j e^{-i q_j x} prod_{j,l} (p_j - q_l - ic)/(q_j - q_l - ic) det[M(p_j,q_l)]
//!     prod_j g(k_j, q_j),    g(k,q) = -c/((k-q)(k-q-ic)),
//!
//! is a sum of products of powers of linear forms in the q's. Each q_j runs over
//! R + i0 and is closed in the lower half plane (x >= 0), one variable at a time.
//! Higher-order poles from coinciding parameters are handled by Laurent expansion.

use num_complex::Complex64 as C64;

pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Factor {
    lin: [i8; MAX_ORDER],
    c0: C64,
    pow: i32,
}

#[derive(Debug, Clone)]
struct Term {
    coef: C64,
    kappa: [i32; MAX_ORDER],
    factors: Vec<Factor>,
}

#[derive(Debug, Clone, Copy)]
struct Pole {
    pl: [i8; MAX_ORDER],
    pc: C64,
}

fn binom(e: i32, j: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..j {
        b *= (e as f64 - i as f64) / (i as f64 + 1.0);
    }
    b
}

fn unit(v: usize) -> [i8; MAX_ORDER] {
    let mut l = [0i8; MAX_ORDER];
    l[v] = 1;
    l
}

fn neg_unit(v: usize) -> [i8; MAX_ORDER] {
    let mut l = [0i8; MAX_ORDER];
    l[v] = -1;
    l
}

/// Signed permutations of 0..n with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    use itertools::Itertools;
    (0..n)
        .permutations(n)
        .map(|s| {
            let sg = crate::multilin::permutation_sign(&s);
            (s, sg)
        })
        .collect()
}

fn initial_terms(p: &[f64], k: &[f64], c: f64, ephi: C64) -> Vec<Term> {
    let n = p.len();
    let i = C64::new(0.0, 1.0);
    let ic = C64::new(0.0, c);
    let one = C64::new(1.0, 0.0);
    // rows of M: for each (j, col) two monomials (coef, factors)
    let entry = |j: usize, col: usize| -> [(C64, Vec<Factor>); 2] {
        let pj = C64::new(p[j], 0.0);
        let dp: C64 = p.iter().map(|pl| pj - pl + ic).product();
        let dm: C64 = p.iter().map(|pl| pj - pl - ic).product();
        let base = Factor { lin: neg_unit(col), c0: pj, pow: -1 };
        let mut up = vec![base];
        let mut dn = vec![base];
        for l in 0..n {
            if l != col {
                up.push(Factor { lin: neg_unit(l), c0: pj + ic, pow: 1 });
                dn.push(Factor { lin: neg_unit(l), c0: pj - ic, pow: 1 });
            }
        }
        [(i * ic / dp, up), (i * ic * ephi / dm, dn)]
    };
    let mut common = Vec::new();
    let mut scal = one;
    for j in 0..n {
        for l in 0..n {
            common.push(Factor { lin: neg_unit(l), c0: C64::new(p[j], -c), pow: 1 });
            if j == l {
                scal /= -ic;
            } else {
                let mut lin = unit(j);
                lin[l] = -1;
                common.push(Factor { lin, c0: -ic, pow: -1 });
            }
        }
    }
    for j in 0..n {
        scal *= -c;
        common.push(Factor { lin: neg_unit(j), c0: C64::new(k[j], 0.0), pow: -1 });
        common.push(Factor { lin: neg_unit(j), c0: C64::new(k[j], -c), pow: -1 });
    }
    let mut terms = Vec::new();
    for (sigma, sg) in permutations(n) {
        let rows: Vec<[(C64, Vec<Factor>); 2]> = (0..n).map(|j| entry(j, sigma[j])).collect();
        for mask in 0..(1usize << n) {
            let mut coef = scal * sg;
            let mut factors = common.clone();
            for (j, row) in rows.iter().enumerate() {
                let (cj, fj) = &row[(mask >> j) & 1];
                coef *= cj;
                factors.extend_from_slice(fj);
            }
            let mut kappa = [0i32; MAX_ORDER];
            for kv in kappa.iter_mut().take(n) {
                *kv = 1;
            }
            terms.push(Term { coef, kappa, factors: merge(factors, 0.0) });
        }
    }
    terms
}

fn merge(mut fs: Vec<Factor>, tol: f64) -> Vec<Factor> {
    let mut out: Vec<Factor> = Vec::with_capacity(fs.len());
    for f in fs.drain(..) {
        if f.pow == 0 {
            continue;
        }
        if let Some(g) = out.iter_mut().find(|g| g.lin == f.lin && (g.c0 - f.c0).norm() <= tol) {
            g.pow += f.pow;
        } else {
            out.push(f);
        }
    }
    out.retain(|f| f.pow != 0);
    out
}

struct Engine {
    n: usize,
    x: f64,
    c: f64,
    tol: f64,
}

impl Engine {
    fn candidates(&self, terms: &[Term], v: usize) -> Vec<Pole> {
        let mut poles: Vec<Pole> = Vec::new();
        for t in terms {
            for f in &t.factors {
                if f.pow >= 0 || f.lin[v] == 0 {
                    continue;
                }
                let s = f.lin[v];
                let mut pl = [0i8; MAX_ORDER];
                for u in 0..self.n {
                    if u != v {
                        pl[u] = -f.lin[u] * s;
                    }
                }
                let pc = -f.c0 * s as f64;
                let sum: i32 = pl.iter().map(|x| *x as i32).sum();
                let below = match sum {
                    0 => pc.im < 0.5 * self.c,
                    1 => pc.im < -0.5 * self.c,
                    _ => false,
                };
                if !below {
                    continue;
                }
                if !poles.iter().any(|q| q.pl == pl && (q.pc - pc).norm() <= self.tol) {
                    poles.push(Pole { pl, pc });
                }
            }
        }
        poles
    }

    fn residue(&self, t: &Term, v: usize, pole: &Pole, out: &mut Vec<Term>) {
        let mut order = 0i32;
        let mut lead = t.coef;
        // (series coefficients per expandable factor) and untouched factors
        let mut expandable: Vec<(i8, [i8; MAX_ORDER], C64, i32)> = Vec::new();
        let mut rest: Vec<Factor> = Vec::new();
        for f in &t.factors {
            let lv = f.lin[v];
            if lv == 0 {
                rest.push(*f);
                continue;
            }
            let mut lin = f.lin;
            lin[v] = 0;
            for u in 0..self.n {
                if u != v {
                    lin[u] += lv * pole.pl[u];
                }
            }
            let c0 = f.c0 + pole.pc * lv as f64;
            if lin.iter().all(|x| *x == 0) && c0.norm() <= self.tol {
                order -= f.pow;
                lead *= (lv as f64).powi(f.pow);
            } else {
                expandable.push((lv, lin, c0, f.pow));
            }
        }
        if order <= 0 {
            return;
        }
        let target = (order - 1) as usize;
        let kv = t.kappa[v];
        let mut kappa = t.kappa;
        kappa[v] = 0;
        for u in 0..self.n {
            if u != v {
                kappa[u] += kv * pole.pl[u] as i32;
            }
        }
        let xk = C64::new(0.0, -self.x * kv as f64);
        lead *= (xk * pole.pc).exp();
        let mut exp_series = Vec::with_capacity(target + 1);
        let mut term = C64::new(1.0, 0.0);
        for j in 0..=target {
            if j > 0 {
                term *= xk / j as f64;
            }
            exp_series.push(term);
        }
        let mut choice = vec![0usize; expandable.len()];
        self.distribute(&expandable, &exp_series, &mut choice, 0, target, lead, &kappa, &rest, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn distribute(
        &self,
        ex: &[(i8, [i8; MAX_ORDER], C64, i32)],
        exp_series: &[C64],
        choice: &mut Vec<usize>,
        slot: usize,
        left: usize,
        lead: C64,
        kappa: &[i32; MAX_ORDER],
        rest: &[Factor],
        out: &mut Vec<Term>,
    ) {
        if slot == ex.len() {
            let mut coef = lead * exp_series[left];
            let mut factors = rest.to_vec();
            for (i, (lv, lin, c0, pow)) in ex.iter().enumerate() {
                let j = choice[i];
                coef *= binom(*pow, j) * (*lv as f64).powi(j as i32);
                let e = *pow - j as i32;
                if e == 0 {
                    continue;
                }
                if lin.iter().all(|x| *x == 0) {
                    coef *= c0.powi(e);
                } else {
                    factors.push(Factor { lin: *lin, c0: *c0, pow: e });
                }
            }
            if coef != C64::new(0.0, 0.0) {
                out.push(Term { coef, kappa: *kappa, factors: merge(factors, self.tol) });
            }
            return;
        }
        for j in 0..=left {
            if j > 0 && binom(ex[slot].3, j) == 0.0 {
                break;
            }
            choice[slot] = j;
            self.distribute(ex, exp_series, choice, slot + 1, left - j, lead, kappa, rest, out);
        }
        choice[slot] = 0;
    }
}

/// Phi_n(p, k) = prod_j int_{R+i0} dq_j/2pi (integrand above), for n = p.len() <= 3.
pub fn phi_kernel(p: &[f64], k: &[f64], c: f64, x: f64, ephi: C64) -> C64 {
    let n = p.len();
    assert!((1..=MAX_ORDER).contains(&n) && k.len() == n);
    for a in 0..n {
        for b in a + 1..n {
            if p[a] == p[b] || k[a] == k[b] {
                return C64::new(0.0, 0.0);
            }
        }
    }
    let scale = 1.0 + p.iter().chain(k).fold(0.0f64, |m, v| m.max(v.abs()));
    let eng = Engine { n, x, c, tol: 1e-11 * scale };
    let mut terms = initial_terms(p, k, c, ephi);
    for v in 0..n {
        let poles = eng.candidates(&terms, v);
        let mut next = Vec::with_capacity(terms.len() * poles.len());
        for pole in &poles {
            for t in &terms {
                eng.residue(t, v, pole, &mut next);
            }
        }
        terms = next;
    }
    let sum: C64 = terms
        .iter()
        .map(|t| {
            debug_assert!(t.factors.is_empty());
            t.coef
        })
        .sum();
    sum * C64::new(0.0, -1.0).powi(n as i32)
}
