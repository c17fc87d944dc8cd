//! Piecewise-constant ellipse phantoms.
//!
//! Pixel `(i, j)` of an `n x n` rendering samples the point
//! `(x, y) = (-1 + 2j/n, 1 - 2i/n)`. The sample grid of side `2n` contains
//! the grid of side `n` at its even rows and columns.

use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::grid::{check_side, ImageGrid};

/// An ellipse with additive intensity, in the `[-1, 1]^2` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    /// Counter-clockwise rotation in radians.
    pub angle: f64,
    pub intensity: f64,
}

impl EllipseSpec {
    pub const fn new(cx: f64, cy: f64, a: f64, b: f64, angle: f64, intensity: f64) -> Self {
        Self {
            cx,
            cy,
            a,
            b,
            angle,
            intensity,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = crate::math::sin_cos(self.angle);
        let u = (c * dx + s * dy) / self.a;
        let v = (-s * dx + c * dy) / self.b;
        u * u + v * v <= 1.0
    }
}

/// Renders the sum of ellipse intensities at each sample point.
pub fn render_phantom(side: usize, ellipses: &[EllipseSpec]) -> Result<ImageGrid> {
    check_side(side)?;
    if ellipses.is_empty() {
        return Err(Error::invalid("ellipses", "need at least one ellipse"));
    }
    if ellipses.iter().any(|e| !(e.a > 0.0 && e.b > 0.0)) {
        return Err(Error::invalid("ellipses", "semi-axes must be positive"));
    }
    let step = 2.0 / side as f64;
    let mut values = Vec::with_capacity(side * side);
    for i in 0..side {
        let y = 1.0 - step * i as f64;
        for j in 0..side {
            let x = -1.0 + step * j as f64;
            let v: f64 = ellipses
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum();
            values.push(v);
        }
    }
    ImageGrid::from_real(side, &values)
}

fn deg(d: f64) -> f64 {
    d * core::f64::consts::PI / 180.0
}

/// Ten-ellipse head phantom (the Toft contrast-enhanced Shepp-Logan
/// geometry). Rendered values lie in `[0, 1]`.
pub fn shepp_logan() -> Vec<EllipseSpec> {
    alloc::vec![
        EllipseSpec::new(0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
        EllipseSpec::new(0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
        EllipseSpec::new(0.22, 0.0, 0.11, 0.31, deg(-18.0), -0.2),
        EllipseSpec::new(-0.22, 0.0, 0.16, 0.41, deg(18.0), -0.2),
        EllipseSpec::new(0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
        EllipseSpec::new(0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
        EllipseSpec::new(0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
        EllipseSpec::new(-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
        EllipseSpec::new(0.0, -0.606, 0.023, 0.023, 0.0, 0.1),
        EllipseSpec::new(0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
    ]
}

/// Linear size of the default head relative to the full-size geometry.
pub const HEAD_SCALE: f64 = 0.35;

/// The default preset: the ten-ellipse head geometry shrunk by
/// [`HEAD_SCALE`] about the origin, which keeps the image sparse enough in
/// the analysis domain for 64 x 64 experiments.
pub fn head() -> Vec<EllipseSpec> {
    scaled(&shepp_logan(), HEAD_SCALE)
}

/// Scales positions and semi-axes by `factor` about the origin.
pub fn scaled(ellipses: &[EllipseSpec], factor: f64) -> Vec<EllipseSpec> {
    ellipses
        .iter()
        .map(|e| EllipseSpec::new(e.cx * factor, e.cy * factor, e.a * factor, e.b * factor, e.angle, e.intensity))
        .collect()
}

/// A centred disk of radius 1/2 and intensity 1.
pub fn disk() -> Vec<EllipseSpec> {
    alloc::vec![EllipseSpec::new(0.0, 0.0, 0.5, 0.5, 0.0, 1.0)]
}

/// Looks up a preset by name (`head`, `shepp-logan` or `disk`).
pub fn preset(name: &str) -> Option<Vec<EllipseSpec>> {
    match name {
        "head" => Some(head()),
        "shepp-logan" => Some(shepp_logan()),
        "disk" => Some(disk()),
        _ => None,
    }
}

pub const DEFAULT_PRESET: &str = "head";

pub const PRESETS: &[&str] = &["head", "shepp-logan", "disk"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::gradient::gradient_forward;
    use crate::operators::vector::l1_norm;
    use crate::operators::{best_s_term_error, AnalysisOperator};

    #[test]
    fn disk_is_two_valued() {
        let x = render_phantom(64, &disk()).unwrap();
        let ones = x.as_slice().iter().filter(|v| v.re == 1.0).count();
        let zeros = x.as_slice().iter().filter(|v| v.re == 0.0).count();
        assert_eq!(ones + zeros, 64 * 64);
        assert!(ones > 0 && zeros > 0);
        assert!(x.as_slice().iter().all(|v| v.im == 0.0));
        // corners lie outside every ellipse
        assert_eq!(x.get(0, 0).re, 0.0);
    }

    #[test]
    fn preset_range() {
        let x = render_phantom(128, &head()).unwrap();
        for v in x.as_slice() {
            assert!(v.re >= -1e-12 && v.re <= 1.0 + 1e-12, "{v}");
        }
        assert!(x.norm() > 0.0);
    }

    #[test]
    fn decimation_consistency() {
        for side in [16, 32, 64] {
            let coarse = render_phantom(side, &head()).unwrap();
            let fine = render_phantom(2 * side, &head()).unwrap();
            for i in 0..side {
                for j in 0..side {
                    assert_eq!(coarse.get(i, j), fine.get(2 * i, 2 * j));
                }
            }
        }
    }

    #[test]
    fn gradient_support_on_boundaries_only() {
        let side = 64;
        let x = render_phantom(side, &head()).unwrap();
        let g = gradient_forward(&x);
        let nonzero = g.iter().filter(|v| v.norm() > 0.0).count();
        let fraction = nonzero as f64 / g.len() as f64;
        assert!(fraction < 8.0 / side as f64, "fraction {fraction}");
    }

    #[test]
    fn approximately_analysis_sparse() {
        let side = 64;
        let x = render_phantom(side, &head()).unwrap();
        let w = AnalysisOperator::new(side, 2.5).unwrap();
        let coeffs = w.analysis_apply(&x).unwrap();
        let s = (0.05 * w.m() as f64) as usize;
        let ratio = best_s_term_error(&coeffs, s).unwrap() / l1_norm(&coeffs);
        assert!(ratio < 0.01, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(render_phantom(48, &disk()).is_err());
        assert!(render_phantom(16, &[]).is_err());
        assert!(render_phantom(16, &[EllipseSpec::new(0.0, 0.0, 0.0, 1.0, 0.0, 1.0)]).is_err());
        assert!(preset("nope").is_none());
    }
}
