use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::fft::Fft2;
use super::mask::SamplingMask;
use crate::error::{check_len, Result};
use crate::grid::ImageGrid;

/// Subsampled, scaled 2D DFT `A = m^{-1/2} P_Omega F`.
///
/// Rows of `A` are orthogonal with `A A^* = nu I`, `nu = N / m`, where `m` is
/// the realised mask size.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    mask: SamplingMask,
    plan: Fft2,
    scale: f64,
    nu: f64,
    inv_nu: f64,
}

impl MeasurementOperator {
    pub fn new(mask: SamplingMask) -> Result<Self> {
        let plan = Fft2::new(mask.side())?;
        let m = mask.m() as f64;
        let n = mask.n() as f64;
        Ok(Self {
            plan,
            scale: 1.0 / crate::math::sqrt(m),
            nu: n / m,
            inv_nu: m / n,
            mask,
        })
    }

    #[inline]
    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.mask.side()
    }

    /// Number of measurements `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.mask.m()
    }

    /// Number of pixels `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.mask.n()
    }

    /// `1 / sqrt(m)`.
    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Tight-row constant `nu = N / m`.
    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `y = A x`, entries in mask index order.
    pub fn measure(&self, x: &ImageGrid) -> Result<Vec<Complex64>> {
        check_len(self.side(), x.side())?;
        Ok(self.measure_slice(x.as_slice()))
    }

    pub(crate) fn measure_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.plan.forward_in_place(&mut buf);
        self.mask
            .indices()
            .iter()
            .map(|&k| buf[k] * self.scale)
            .collect()
    }

    /// `A^* y = m^{-1/2} F^* P_Omega^T y`.
    pub fn measure_adjoint(&self, y: &[Complex64]) -> Result<ImageGrid> {
        check_len(self.m(), y.len())?;
        ImageGrid::from_vec(self.side(), self.adjoint_slice(y))
    }

    pub(crate) fn adjoint_slice(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n()];
        for (&k, v) in self.mask.indices().iter().zip(y) {
            buf[k] = v * self.scale;
        }
        self.plan.adjoint_in_place(&mut buf);
        buf
    }

    /// Moore-Penrose pseudoinverse `A^dagger y = nu^{-1} A^* y`.
    pub fn pseudo_inverse(&self, y: &[Complex64]) -> Result<ImageGrid> {
        check_len(self.m(), y.len())?;
        ImageGrid::from_vec(self.side(), self.pseudo_inverse_slice(y))
    }

    pub(crate) fn pseudo_inverse_slice(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.adjoint_slice(y);
        for v in out.iter_mut() {
            *v *= self.inv_nu;
        }
        out
    }
}
