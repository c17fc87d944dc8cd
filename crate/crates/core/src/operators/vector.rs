//! Small helpers on complex vectors.

use num_complex::Complex64;

/// `sum |v_i|^2`, accumulated left to right.
#[inline]
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for z in v {
        acc += z.norm_sqr();
    }
    acc
}

#[inline]
pub fn norm(v: &[Complex64]) -> f64 {
    crate::math::sqrt(norm_sqr(v))
}

pub fn l1_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Complex inner product `<a, b> = sum conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Euclidean distance between two vectors of equal length.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += (x - y).norm_sqr();
    }
    crate::math::sqrt(acc)
}
