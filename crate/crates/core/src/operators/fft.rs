use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::grid::{check_side, ImageGrid};
use crate::math;

/// Radix-2 plan for the unnormalised 2D DFT on a `side x side` grid.
///
/// The forward transform uses the kernel `exp(-2 pi i k j / n)` along each
/// axis with no scaling, so `F F^* = N I`. The adjoint is the same transform
/// with conjugated twiddles (again unscaled).
#[derive(Debug, Clone)]
pub struct Fft2 {
    side: usize,
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Fft2 {
    pub fn new(side: usize) -> Result<Self> {
        check_side(side)?;
        let half = side / 2;
        let twiddles = (0..half)
            .map(|k| {
                let angle = -2.0 * PI * (k as f64) / (side as f64);
                let (sin, cos) = math::sin_cos(angle);
                Complex64::new(cos, sin)
            })
            .collect();
        let bits = side.trailing_zeros();
        let bit_reverse = (0..side)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Ok(Self {
            side,
            twiddles,
            bit_reverse,
        })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    /// In-place forward transform of a row-major buffer.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform_2d(data, false);
    }

    /// In-place adjoint (`F^*`, unnormalised inverse) of a row-major buffer.
    pub fn adjoint_in_place(&self, data: &mut [Complex64]) {
        self.transform_2d(data, true);
    }

    fn transform_2d(&self, data: &mut [Complex64], conjugate: bool) {
        let n = self.side;
        assert_eq!(data.len(), n * n, "buffer does not match plan side");
        for row in data.chunks_exact_mut(n) {
            self.transform_1d(row, conjugate);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            self.transform_1d(&mut column, conjugate);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }

    fn transform_1d(&self, buf: &mut [Complex64], conjugate: bool) {
        let n = buf.len();
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if conjugate {
                        w = w.conj();
                    }
                    let u = buf[start + k];
                    let v = buf[start + k + half] * w;
                    buf[start + k] = u + v;
                    buf[start + k + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

/// Unnormalised forward 2D DFT of an image (`F x`).
pub fn dft2_forward(x: &ImageGrid) -> Result<Vec<Complex64>> {
    let plan = Fft2::new(x.side())?;
    let mut out = x.as_slice().to_vec();
    plan.forward_in_place(&mut out);
    Ok(out)
}

/// `F^* v`; `dft2_adjoint(dft2_forward(x)) / N == x`.
pub fn dft2_adjoint(side: usize, v: &[Complex64]) -> Result<ImageGrid> {
    let plan = Fft2::new(side)?;
    check_len(side * side, v.len())?;
    let mut out = v.to_vec();
    plan.adjoint_in_place(&mut out);
    ImageGrid::from_vec(side, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::vector::norm_sqr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft2(side: usize, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); side * side];
        for k1 in 0..side {
            for k2 in 0..side {
                let mut acc = Complex64::new(0.0, 0.0);
                for j1 in 0..side {
                    for j2 in 0..side {
                        let phase = -2.0 * PI * ((k1 * j1 + k2 * j2) % side) as f64 / side as f64;
                        acc += x[j1 * side + j2] * Complex64::new(phase.cos(), phase.sin());
                    }
                }
                out[k1 * side + k2] = acc;
            }
        }
        out
    }

    fn random_image(side: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..side * side)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        ImageGrid::from_vec(side, data).unwrap()
    }

    #[test]
    fn constant_ones_puts_everything_in_dc() {
        let x = ImageGrid::from_real(2, &[1.0; 4]).unwrap();
        let fx = dft2_forward(&x).unwrap();
        assert_eq!(fx[0], Complex64::new(4.0, 0.0));
        for v in &fx[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let x = ImageGrid::zeros(8).unwrap();
        assert!(dft2_forward(&x).unwrap().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn matches_naive_dft() {
        for side in [1, 2, 4, 8] {
            let x = random_image(side, side as u64);
            let fast = dft2_forward(&x).unwrap();
            let slow = naive_dft2(side, x.as_slice());
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12, "side {side}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn parseval_with_unnormalised_scaling() {
        let x = random_image(8, 7);
        let fx = dft2_forward(&x).unwrap();
        let lhs = norm_sqr(&fx);
        let rhs = 64.0 * norm_sqr(x.as_slice());
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn adjoint_then_divide_recovers_input() {
        let x = random_image(16, 3);
        let fx = dft2_forward(&x).unwrap();
        let back = dft2_adjoint(16, &fx).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            assert!((a / 256.0 - b).norm() < 1e-14);
        }
    }
}
