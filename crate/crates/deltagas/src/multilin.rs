//! Small dense determinants and permanents.

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use itertools::Itertools;
use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64 as C64;

pub const RYSER_MAX: usize = 20;
pub const BRUTE_MAX: usize = 9;

pub fn det_dense(m: &KernelMatrix) -> C64 {
    det_of(&m.entries)
}

/// LU determinant with partial pivoting; the empty matrix has determinant 1.
pub fn det_of<T: ComplexField + Copy>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::one();
    }
    m.clone().lu().determinant()
}

pub fn permanent_ryser(m: &KernelMatrix) -> Result<C64> {
    ryser(&m.entries)
}

pub fn permanent_bruteforce(m: &KernelMatrix) -> Result<C64> {
    bruteforce(&m.entries)
}

/// Ryser inclusion-exclusion in the Nijenhuis-Wilf form, visiting subsets of the
/// first n - 1 columns in Gray-code order with row sums shifted by half the full row.
pub fn ryser<T: ComplexField + Copy>(a: &DMatrix<T>) -> Result<T> {
    let n = a.nrows();
    if n > RYSER_MAX {
        return Err(Error::Size(format!("Ryser permanent limited to n <= {RYSER_MAX}, got {n}")));
    }
    if n == 0 {
        return Ok(T::one());
    }
    let two = T::one() + T::one();
    let half = two.recip();
    let mut rows: Vec<T> = (0..n)
        .map(|i| a[(i, n - 1)] - (0..n).fold(T::zero(), |s, j| s + a[(i, j)]) * half)
        .collect();
    let mut in_set = vec![false; n];
    let mut total = rows.iter().fold(T::one(), |acc, r| acc * *r);
    let mut size = 0usize;
    for k in 1u64..(1u64 << (n - 1)) {
        let j = k.trailing_zeros() as usize;
        in_set[j] = !in_set[j];
        if in_set[j] {
            size += 1;
            for (i, r) in rows.iter_mut().enumerate() {
                *r += a[(i, j)];
            }
        } else {
            size -= 1;
            for (i, r) in rows.iter_mut().enumerate() {
                *r -= a[(i, j)];
            }
        }
        let prod = rows.iter().fold(T::one(), |acc, r| acc * *r);
        if size.is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n % 2 == 1 { total * two } else { -total * two })
}

/// Direct sum over all n! permutations.
pub fn bruteforce<T: ComplexField + Copy>(a: &DMatrix<T>) -> Result<T> {
    let n = a.nrows();
    if n > BRUTE_MAX {
        return Err(Error::Size(format!("brute-force permanent limited to n <= {BRUTE_MAX}, got {n}")));
    }
    if n == 0 {
        return Ok(T::one());
    }
    Ok((0..n)
        .permutations(n)
        .map(|s| s.iter().enumerate().fold(T::one(), |acc, (i, j)| acc * a[(i, *j)]))
        .fold(T::zero(), |acc, v| acc + v))
}

/// Sign of a permutation given as images of 0..n.
pub fn permutation_sign(s: &[usize]) -> f64 {
    let mut seen = vec![false; s.len()];
    let mut sign = 1.0;
    for i in 0..s.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = s[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Provenance;

    fn km(rows: &[&[f64]]) -> KernelMatrix {
        let n = rows.len();
        KernelMatrix::from_fn(n, Provenance::Custom, |i, j| C64::new(rows[i][j], 0.0))
    }

    #[test]
    fn two_by_two() {
        let m = km(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert!((det_dense(&m) - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((permanent_ryser(&m).unwrap() - C64::new(10.0, 0.0)).norm() < 1e-14);
        assert!((permanent_bruteforce(&m).unwrap() - C64::new(10.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn empty_and_single() {
        let e = KernelMatrix::from_fn(0, Provenance::Custom, |_, _| C64::new(0.0, 0.0));
        assert_eq!(det_dense(&e), C64::new(1.0, 0.0));
        assert_eq!(permanent_ryser(&e).unwrap(), C64::new(1.0, 0.0));
        let a = km(&[&[-3.5]]);
        assert_eq!(permanent_ryser(&a).unwrap(), C64::new(-3.5, 0.0));
    }

    #[test]
    fn signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
    }

    #[test]
    fn size_limits() {
        let big = DMatrix::<f64>::zeros(10, 10);
        assert!(matches!(bruteforce(&big), Err(Error::Size(_))));
        let huge = DMatrix::<f64>::zeros(21, 21);
        assert!(matches!(ryser(&huge), Err(Error::Size(_))));
    }
}
