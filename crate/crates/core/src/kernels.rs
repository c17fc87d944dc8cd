//! Arithmetic shared by the plain solver, the staged network evaluation and
//! the adjoint tape. All three must call these so their outputs agree bit
//! for bit.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::operators::{AnalysisOperator, MeasurementOperator};

/// Entrywise `T_mu`: `w / mu` when `|w| <= mu`, else `w / |w|`.
#[inline]
pub(crate) fn huber_gradient_entry(w: Complex64, mu: f64) -> Complex64 {
    let mag = w.norm();
    if mag <= mu {
        w / mu
    } else {
        w / mag
    }
}

pub(crate) fn huber_gradient_in_place(w: &mut [Complex64], mu: f64) {
    for v in w.iter_mut() {
        *v = huber_gradient_entry(*v, mu);
    }
}

/// `W T_mu(W^* z)`, the gradient of the smoothed objective at `z`.
pub(crate) fn smoothed_gradient(analysis: &AnalysisOperator, z: &[Complex64], mu: f64) -> Vec<Complex64> {
    let mut w = analysis.analysis_slice(z);
    huber_gradient_in_place(&mut w, mu);
    analysis.synthesis_slice(&w)
}

/// `base - coef * dir`.
pub(crate) fn descend(base: &[Complex64], coef: f64, dir: &[Complex64]) -> Vec<Complex64> {
    base.iter().zip(dir).map(|(b, d)| b - d * coef).collect()
}

/// `y - A q`.
pub(crate) fn residual(measurement: &MeasurementOperator, y: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
    let aq = measurement.measure_slice(q);
    y.iter().zip(aq).map(|(a, b)| a - b).collect()
}

/// `max(0, sqrt(s) / eta - 1)` where `s` is a squared residual norm.
#[inline]
pub(crate) fn multiplier(sq_norm: f64, eta: f64) -> f64 {
    (crate::math::sqrt(sq_norm) / eta - 1.0).max(0.0)
}

/// `u / (u + 1)`.
#[inline]
pub(crate) fn gate(lambda: f64) -> f64 {
    lambda / (lambda + 1.0)
}

/// `base + gate * dir`.
pub(crate) fn gated_update(base: &[Complex64], gate: f64, dir: &[Complex64]) -> Vec<Complex64> {
    base.iter().zip(dir).map(|(b, d)| b + d * gate).collect()
}

/// `tau v + (1 - tau) x`.
pub(crate) fn convex_step(tau: f64, v: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let rest = 1.0 - tau;
    v.iter().zip(x).map(|(a, b)| a * tau + b * rest).collect()
}

#[inline]
pub(crate) fn alpha(i: usize) -> f64 {
    (i as f64 + 1.0) / 2.0
}

#[inline]
pub(crate) fn tau(i: usize) -> f64 {
    2.0 / (i as f64 + 3.0)
}

/// `gate * dir`. Adding the result to `base` reproduces [`gated_update`].
pub(crate) fn rescale(gate: f64, dir: &[Complex64]) -> Vec<Complex64> {
    dir.iter().map(|d| d * gate).collect()
}

pub(crate) fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Entrywise squared modulus.
pub(crate) fn squared_moduli(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|c| c.norm_sqr()).collect()
}

/// Left-to-right sum, the same order as `norm_sqr`.
pub(crate) fn sum(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x)
}
