//! Full-depth orthonormal 2D Haar transform.
//!
//! Coefficient layout: the single approximation coefficient first, then the
//! detail bands from coarsest (1x1) to finest (n/2 x n/2). Each scale stores
//! its bands in `LH, HL, HH` order, row-major inside a band. `LH` is low-pass
//! along rows and high-pass along columns, `HL` the reverse.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::grid::{check_side, ImageGrid};

/// Applies `Phi^*` (analysis direction).
pub fn haar_forward(x: &ImageGrid) -> Vec<Complex64> {
    forward_slice(x.side(), x.as_slice())
}

/// Applies `Phi` (synthesis direction); exact inverse of [`haar_forward`].
pub fn haar_inverse(side: usize, coeffs: &[Complex64]) -> Result<ImageGrid> {
    check_side(side)?;
    check_len(side * side, coeffs.len())?;
    ImageGrid::from_vec(side, inverse_slice(side, coeffs))
}

pub(crate) fn forward_slice(side: usize, x: &[Complex64]) -> Vec<Complex64> {
    let mut work = x.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); side];
    let mut size = side;
    while size > 1 {
        for r in 0..size {
            split_line(&mut work, r * side, 1, size, &mut scratch);
        }
        for c in 0..size {
            split_line(&mut work, c, side, size, &mut scratch);
        }
        size /= 2;
    }
    pack(side, &work)
}

pub(crate) fn inverse_slice(side: usize, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut work = unpack(side, coeffs);
    let mut scratch = vec![Complex64::new(0.0, 0.0); side];
    let mut size = 2;
    while size <= side {
        for c in 0..size {
            merge_line(&mut work, c, side, size, &mut scratch);
        }
        for r in 0..size {
            merge_line(&mut work, r * side, 1, size, &mut scratch);
        }
        size *= 2;
    }
    work
}

// One analysis step on `len` entries starting at `start` with `stride`:
// averages go to the first half, differences to the second.
fn split_line(buf: &mut [Complex64], start: usize, stride: usize, len: usize, scratch: &mut [Complex64]) {
    let half = len / 2;
    for k in 0..half {
        let a = buf[start + 2 * k * stride];
        let b = buf[start + (2 * k + 1) * stride];
        scratch[k] = (a + b) * FRAC_1_SQRT_2;
        scratch[half + k] = (a - b) * FRAC_1_SQRT_2;
    }
    for k in 0..len {
        buf[start + k * stride] = scratch[k];
    }
}

fn merge_line(buf: &mut [Complex64], start: usize, stride: usize, len: usize, scratch: &mut [Complex64]) {
    let half = len / 2;
    for k in 0..half {
        let s = buf[start + k * stride];
        let d = buf[start + (half + k) * stride];
        scratch[2 * k] = (s + d) * FRAC_1_SQRT_2;
        scratch[2 * k + 1] = (s - d) * FRAC_1_SQRT_2;
    }
    for k in 0..len {
        buf[start + k * stride] = scratch[k];
    }
}

// Visits (flat offset in the Mallat pyramid, packed position) pairs in
// packed order.
fn for_each_slot(side: usize, mut f: impl FnMut(usize, usize)) {
    let mut pos = 0;
    f(0, pos);
    pos += 1;
    let mut band = 1;
    while band < side {
        // LH: bottom-left, HL: top-right, HH: bottom-right
        for (row0, col0) in [(band, 0), (0, band), (band, band)] {
            for r in 0..band {
                for c in 0..band {
                    f((row0 + r) * side + col0 + c, pos);
                    pos += 1;
                }
            }
        }
        band *= 2;
    }
}

fn pack(side: usize, pyramid: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); side * side];
    for_each_slot(side, |src, dst| out[dst] = pyramid[src]);
    out
}

fn unpack(side: usize, packed: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); side * side];
    for_each_slot(side, |dst, src| out[dst] = packed[src]);
    out
}
