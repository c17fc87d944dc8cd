use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// A complex `side x side` image stored row-major.
///
/// `side` is always a power of two so the full-depth Haar transform and the
/// radix-2 FFT apply.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    side: usize,
    data: Vec<Complex64>,
}

impl ImageGrid {
    pub fn zeros(side: usize) -> Result<Self> {
        check_side(side)?;
        Ok(Self {
            side,
            data: vec![Complex64::new(0.0, 0.0); side * side],
        })
    }

    pub fn from_vec(side: usize, data: Vec<Complex64>) -> Result<Self> {
        check_side(side)?;
        check_len(side * side, data.len())?;
        Ok(Self { side, data })
    }

    /// Embeds a real image with zero imaginary part.
    pub fn from_real(side: usize, values: &[f64]) -> Result<Self> {
        check_side(side)?;
        check_len(side * side, values.len())?;
        Ok(Self {
            side,
            data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of pixels, `side^2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.side + col]
    }

    pub fn norm(&self) -> f64 {
        crate::operators::vector::norm(&self.data)
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &ImageGrid) -> f64 {
        debug_assert_eq!(self.side, other.side);
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += (a - b).norm_sqr();
        }
        crate::math::sqrt(acc)
    }
}

pub(crate) fn check_side(side: usize) -> Result<()> {
    if side == 0 || !side.is_power_of_two() {
        Err(Error::SideNotPowerOfTwo(side))
    } else {
        Ok(())
    }
}
