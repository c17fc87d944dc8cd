use alloc::vec::Vec;

use num_complex::Complex64;

use super::{gradient, haar};
use crate::error::{check_len, Error, Result};
use crate::grid::{check_side, ImageGrid};

/// Haar-plus-gradient analysis operator `W^* = [Phi^*; sqrt(lambda) grad]`.
///
/// Maps `C^N -> C^M` with `M = 3N`. Since `Phi` is orthogonal and
/// `||grad||^2 <= 8`, the frame bounds are `1` and `beta = 1 + 8 lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOperator {
    side: usize,
    lambda: f64,
    sqrt_lambda: f64,
    levels: u32,
}

impl AnalysisOperator {
    pub fn new(side: usize, lambda: f64) -> Result<Self> {
        check_side(side)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite and nonnegative"));
        }
        Ok(Self {
            side,
            lambda,
            sqrt_lambda: crate::math::sqrt(lambda),
            levels: side.trailing_zeros(),
        })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of Haar decomposition levels, `log2(side)`.
    #[inline]
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Image dimension `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    /// Coefficient dimension `M = 3N`.
    #[inline]
    pub fn m(&self) -> usize {
        3 * self.n()
    }

    /// Analytic upper frame bound `1 + 8 lambda`.
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 + 8.0 * self.lambda
    }

    /// `W^* x`: Haar coefficients followed by the weighted gradient.
    pub fn analysis_apply(&self, x: &ImageGrid) -> Result<Vec<Complex64>> {
        check_len(self.side, x.side())?;
        Ok(self.analysis_slice(x.as_slice()))
    }

    /// `W z = Phi z[..N] + sqrt(lambda) grad^* z[N..]`.
    pub fn synthesis_apply(&self, z: &[Complex64]) -> Result<ImageGrid> {
        check_len(self.m(), z.len())?;
        ImageGrid::from_vec(self.side, self.synthesis_slice(z))
    }

    pub(crate) fn analysis_slice(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = haar::forward_slice(self.side, x);
        let grad = gradient::forward_slice(self.side, x);
        out.extend(grad.into_iter().map(|g| g * self.sqrt_lambda));
        out
    }

    pub(crate) fn synthesis_slice(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let mut out = haar::inverse_slice(self.side, &z[..n]);
        let grad = gradient::adjoint_slice(self.side, &z[n..]);
        for (o, g) in out.iter_mut().zip(grad) {
            *o += g * self.sqrt_lambda;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::vector::{inner, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn zero_weight_drops_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = AnalysisOperator::new(8, 0.0).unwrap();
        let x = ImageGrid::from_vec(8, random_vec(&mut rng, 64)).unwrap();
        let out = w.analysis_apply(&x).unwrap();
        assert_eq!(out.len(), 192);
        assert_eq!(&out[..64], haar::haar_forward(&x).as_slice());
        assert!(out[64..].iter().all(|v| v.norm() == 0.0));
        // W W^* = I when lambda = 0
        let back = w.synthesis_apply(&out).unwrap();
        assert!(back.distance(&x) < 1e-13 * x.norm());
    }

    #[test]
    fn constant_image_has_only_the_approximation_coefficient() {
        let w = AnalysisOperator::new(8, 2.5).unwrap();
        let x = ImageGrid::from_real(8, &[0.25; 64]).unwrap();
        let out = w.analysis_apply(&x).unwrap();
        assert!((out[0].re - 2.0).abs() < 1e-14);
        assert!(out[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn frame_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = AnalysisOperator::new(16, 2.5).unwrap();
        assert_eq!(w.beta(), 21.0);
        for _ in 0..100 {
            let x = ImageGrid::from_vec(16, random_vec(&mut rng, 256)).unwrap();
            let ratio = norm(&w.analysis_apply(&x).unwrap()) / x.norm();
            assert!(ratio >= 1.0 - 1e-12 && ratio <= 21f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = AnalysisOperator::new(8, 2.5).unwrap();
        let x = ImageGrid::from_vec(8, random_vec(&mut rng, 64)).unwrap();
        let z = random_vec(&mut rng, 192);
        let lhs = inner(&w.analysis_apply(&x).unwrap(), &z);
        let rhs = inner(x.as_slice(), w.synthesis_apply(&z).unwrap().as_slice());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AnalysisOperator::new(6, 1.0).is_err());
        assert!(AnalysisOperator::new(8, -1.0).is_err());
        let w = AnalysisOperator::new(8, 1.0).unwrap();
        assert!(w.analysis_apply(&ImageGrid::zeros(4).unwrap()).is_err());
        assert!(w.synthesis_apply(&[Complex64::new(0.0, 0.0); 64]).is_err());
    }
}
