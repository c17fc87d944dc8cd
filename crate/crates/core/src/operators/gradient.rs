//! Anisotropic forward differences with periodic boundary conditions.
//!
//! Output layout: the horizontal block `x[i, j+1] - x[i, j]` followed by the
//! vertical block `x[i+1, j] - x[i, j]`, each row-major of length `N`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::grid::{check_side, ImageGrid};

pub fn gradient_forward(x: &ImageGrid) -> Vec<Complex64> {
    forward_slice(x.side(), x.as_slice())
}

/// `grad^* g` for `g` of length `2N`.
pub fn gradient_adjoint(side: usize, g: &[Complex64]) -> Result<ImageGrid> {
    check_side(side)?;
    check_len(2 * side * side, g.len())?;
    ImageGrid::from_vec(side, adjoint_slice(side, g))
}

pub(crate) fn forward_slice(side: usize, x: &[Complex64]) -> Vec<Complex64> {
    let n = side * side;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n];
    let (horiz, vert) = out.split_at_mut(n);
    for i in 0..side {
        let down = ((i + 1) % side) * side;
        for j in 0..side {
            let here = x[i * side + j];
            horiz[i * side + j] = x[i * side + (j + 1) % side] - here;
            vert[i * side + j] = x[down + j] - here;
        }
    }
    out
}

pub(crate) fn adjoint_slice(side: usize, g: &[Complex64]) -> Vec<Complex64> {
    let n = side * side;
    let (horiz, vert) = g.split_at(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..side {
        let up = ((i + side - 1) % side) * side;
        for j in 0..side {
            let left = (j + side - 1) % side;
            let k = i * side + j;
            out[k] = horiz[i * side + left] - horiz[k] + vert[up + j] - vert[k];
        }
    }
    out
}
