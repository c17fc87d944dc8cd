use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::grid::check_side;

/// Selected 2D frequencies `Omega`, as sorted flat indices into the
/// unshifted row-major DFT grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SamplingMask {
    side: usize,
    indices: Vec<usize>,
}

impl SamplingMask {
    /// Validates that `indices` are strictly increasing, in range and nonempty.
    pub fn new(side: usize, indices: Vec<usize>) -> Result<Self> {
        check_side(side)?;
        if indices.is_empty() {
            return Err(Error::invalid("indices", "mask must select at least one frequency"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("indices", "must be strictly increasing"));
        }
        if *indices.last().unwrap() >= side * side {
            return Err(Error::invalid("indices", "index out of range"));
        }
        Ok(Self { side, indices })
    }

    /// Every frequency.
    pub fn full(side: usize) -> Result<Self> {
        Self::new(side, (0..side * side).collect())
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of selected frequencies.
    #[inline]
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Grid size `N = side^2`.
    #[inline]
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn sampling_rate(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }
}

/// Centred frequency `(w1, w2)` in `[-n/2, n/2)^2` of a flat DFT index
/// (fftshift convention).
pub fn centered_frequency(side: usize, index: usize) -> (i64, i64) {
    let wrap = |k: usize| -> i64 {
        if k < side / 2 {
            k as i64
        } else {
            k as i64 - side as i64
        }
    };
    (wrap(index / side), wrap(index % side))
}

/// Parameters of the two-part Bernoulli mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskDensityConfig {
    pub side: usize,
    pub target_m: usize,
    /// Fraction of `target_m` expected from the inverse-square-law part.
    pub split: f64,
    pub seed: u64,
}

impl MaskDensityConfig {
    pub fn new(side: usize, target_m: usize, seed: u64) -> Self {
        Self {
            side,
            target_m,
            split: 0.5,
            seed,
        }
    }

    /// Config for a sampling rate `m / N`, rounded to the nearest count.
    pub fn with_rate(side: usize, rate: f64, seed: u64) -> Self {
        let n = (side * side) as f64;
        let target = crate::math::round(rate * n).clamp(1.0, n) as usize;
        Self::new(side, target, seed)
    }

    fn validate(&self) -> Result<()> {
        check_side(self.side)?;
        if self.target_m == 0 || self.target_m > self.side * self.side {
            return Err(Error::invalid("target_m", "must lie in 1..=N"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::invalid("split", "must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

const MAX_RETRIES: u64 = 16;
const BISECTION_STEPS: usize = 200;

/// Draws `Omega = Omega_1 u Omega_2`.
///
/// `Omega_1` includes each frequency independently with probability
/// `min(1, C / (w1^2 + w2^2 + 1))`, `C` bisected so the expected count is
/// `split * target_m`. Conditional on `Omega_1`, `Omega_2` includes each
/// remaining frequency with the common probability
/// `(target_m - |Omega_1|) / (N - |Omega_1|)` (clamped to `[0, 1]`), so the
/// total is `target_m` in expectation. The realised size is random.
///
/// Deterministic in `cfg.seed`. An empty draw is retried on a fresh ChaCha
/// stream, at most 16 times.
pub fn generate_mask(cfg: &MaskDensityConfig) -> Result<SamplingMask> {
    cfg.validate()?;
    let side = cfg.side;
    let n = side * side;
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let (w1, w2) = centered_frequency(side, k);
            1.0 / ((w1 * w1 + w2 * w2 + 1) as f64)
        })
        .collect();
    let constant = calibrate(&weights, cfg.split * cfg.target_m as f64);

    for attempt in 0..=MAX_RETRIES {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt);

        let mut selected = alloc::vec![false; n];
        let mut first = 0usize;
        for (k, w) in weights.iter().enumerate() {
            let p = (constant * w).min(1.0);
            if rng.random::<f64>() < p {
                selected[k] = true;
                first += 1;
            }
        }
        let rest = n - first;
        if rest > 0 {
            let q = ((cfg.target_m as f64 - first as f64) / rest as f64).clamp(0.0, 1.0);
            for flag in selected.iter_mut().filter(|f| !**f) {
                if rng.random::<f64>() < q {
                    *flag = true;
                }
            }
        }
        let indices: Vec<usize> = (0..n).filter(|&k| selected[k]).collect();
        if !indices.is_empty() {
            return SamplingMask::new(side, indices);
        }
    }
    Err(Error::EmptyMask(MAX_RETRIES as usize + 1))
}

// Solves sum_k min(1, c w_k) = expected for c by bisection.
fn calibrate(weights: &[f64], expected: f64) -> f64 {
    let count = |c: f64| weights.iter().map(|w| (c * w).min(1.0)).sum::<f64>();
    let mut lo = 0.0;
    let mut hi = weights.iter().map(|w| 1.0 / w).fold(1.0, f64::max);
    if count(hi) <= expected {
        return hi;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if count(mid) < expected {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn centred_coordinates() {
        assert_eq!(centered_frequency(8, 0), (0, 0));
        assert_eq!(centered_frequency(8, 3), (0, 3));
        assert_eq!(centered_frequency(8, 4), (0, -4));
        assert_eq!(centered_frequency(8, 7 * 8 + 5), (-1, -3));
    }

    #[test]
    fn full_budget_selects_everything() {
        for split in [0.1, 0.5, 0.9] {
            let mut cfg = MaskDensityConfig::new(16, 256, 42);
            cfg.split = split;
            let mask = generate_mask(&cfg).unwrap();
            assert_eq!(mask.m(), 256);
        }
    }

    #[test]
    fn seeded_determinism() {
        let cfg = MaskDensityConfig::with_rate(32, 0.15, 7);
        assert_eq!(generate_mask(&cfg).unwrap(), generate_mask(&cfg).unwrap());
        let other = MaskDensityConfig::with_rate(32, 0.15, 8);
        assert_ne!(generate_mask(&cfg).unwrap(), generate_mask(&other).unwrap());
    }

    #[test]
    fn calibration_hits_expected_count() {
        let side = 32;
        let weights: Vec<f64> = (0..side * side)
            .map(|k| {
                let (a, b) = centered_frequency(side, k);
                1.0 / ((a * a + b * b + 1) as f64)
            })
            .collect();
        let c = calibrate(&weights, 100.0);
        let total: f64 = weights.iter().map(|w| (c * w).min(1.0)).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn dc_is_most_likely() {
        // DC has the largest inclusion probability, so it is in nearly every mask.
        let hits = (0..50)
            .filter(|&seed| {
                let mask = generate_mask(&MaskDensityConfig::with_rate(32, 0.1, seed)).unwrap();
                mask.indices()[0] == 0
            })
            .count();
        assert!(hits >= 49);
    }

    #[test]
    fn invalid_configs() {
        assert!(generate_mask(&MaskDensityConfig::new(16, 0, 1)).is_err());
        assert!(generate_mask(&MaskDensityConfig::new(16, 257, 1)).is_err());
        let mut cfg = MaskDensityConfig::new(16, 10, 1);
        cfg.split = 1.0;
        assert!(generate_mask(&cfg).is_err());
        assert!(generate_mask(&MaskDensityConfig::new(12, 10, 1)).is_err());
    }

    #[test]
    fn mask_validation() {
        assert!(SamplingMask::new(4, vec![]).is_err());
        assert!(SamplingMask::new(4, vec![2, 2]).is_err());
        assert!(SamplingMask::new(4, vec![3, 1]).is_err());
        assert!(SamplingMask::new(4, vec![16]).is_err());
        assert_eq!(SamplingMask::new(4, vec![0, 5, 15]).unwrap().m(), 3);
    }
}
