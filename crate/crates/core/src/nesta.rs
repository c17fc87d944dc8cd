//! One NESTA solve: Nesterov's accelerated projected gradient applied to the
//! Huber-smoothed analysis `l1` objective over the ball
//! `{x : ||y - A x|| <= eta}`.
//!
//! The step sequences are fixed to `alpha_i = (i + 1) / 2` and
//! `tau_i = 2 / (i + 3)`, and the Lipschitz constant of the smoothed gradient
//! is `beta / mu` with `beta = 1 + 8 lambda` the analytic frame bound.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::ImageGrid;
use crate::kernels;
use crate::operators::vector::norm_sqr;
use crate::operators::{AnalysisOperator, MeasurementOperator};

/// Complex Huber function `H_mu(a)`.
pub fn huber_value(a: Complex64, mu: f64) -> f64 {
    let mag = a.norm();
    if mag <= mu {
        mag * mag / (2.0 * mu)
    } else {
        mag - mu / 2.0
    }
}

/// Smoothed `l1` norm `sum_i H_mu(z_i)`.
pub fn smoothed_l1(z: &[Complex64], mu: f64) -> f64 {
    z.iter().map(|&v| huber_value(v, mu)).sum()
}

/// Entrywise `T_mu`, the gradient field of the Huber smoothing. Every output
/// entry has modulus at most one.
pub fn t_mu(z: &[Complex64], mu: f64) -> Vec<Complex64> {
    z.iter().map(|&v| kernels::huber_gradient_entry(v, mu)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestaConfig {
    pub mu: f64,
    pub eta: f64,
    pub n_max: usize,
}

impl NestaConfig {
    pub fn new(mu: f64, eta: f64, n_max: usize) -> Result<Self> {
        let cfg = Self { mu, eta, n_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", "must be positive and finite"));
        }
        check_eta(self.eta)
    }

    /// `alpha_i = (i + 1) / 2`.
    pub fn alpha(i: usize) -> f64 {
        kernels::alpha(i)
    }

    /// `tau_i = 2 / (i + 3)`.
    pub fn tau(i: usize) -> f64 {
        kernels::tau(i)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("eta", "must be positive and finite"))
    }
}

/// Iteration state between two NESTA steps.
///
/// `z` is `z_n`, `qv` the running accumulator `q_v^{(n-1)}` (initially `z_0`),
/// `x` the last primal iterate (initially `z_0`, replaced by `x_n` after step
/// `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct NestaState {
    pub iter: usize,
    pub z: ImageGrid,
    pub qv: ImageGrid,
    pub x: ImageGrid,
}

impl NestaState {
    pub fn initial(z0: ImageGrid) -> Self {
        Self {
            iter: 0,
            qv: z0.clone(),
            x: z0.clone(),
            z: z0,
        }
    }
}

/// Euclidean projection of `q` onto `{u : ||y - A u|| <= eta}`, returning the
/// projected point and the multiplier `lambda = max(0, ||y - A q|| / eta - 1)`.
///
/// Uses `A A^* = nu I`: `u = q + lambda / (lambda + 1) * nu^{-1} A^* (y - A q)`.
pub fn project_feasible(
    q: &ImageGrid,
    measurement: &MeasurementOperator,
    y: &[Complex64],
    eta: f64,
) -> Result<(ImageGrid, f64)> {
    check_eta(eta)?;
    check_len(measurement.side(), q.side())?;
    check_len(measurement.m(), y.len())?;
    let (u, lambda) = project_slice(q.as_slice(), measurement, y, eta);
    Ok((ImageGrid::from_vec(q.side(), u)?, lambda))
}

pub(crate) fn project_slice(
    q: &[Complex64],
    measurement: &MeasurementOperator,
    y: &[Complex64],
    eta: f64,
) -> (Vec<Complex64>, f64) {
    let r = kernels::residual(measurement, y, q);
    let lambda = kernels::multiplier(norm_sqr(&r), eta);
    let p = measurement.pseudo_inverse_slice(&r);
    (kernels::gated_update(q, kernels::gate(lambda), &p), lambda)
}

/// One NESTA iteration `(q_v^{(n-1)}, z_n) -> (q_v^{(n)}, z_{n+1})`, also
/// producing `x_n`.
pub fn nesta_step(
    state: &NestaState,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
    cfg: &NestaConfig,
) -> Result<NestaState> {
    cfg.validate()?;
    check_problem(state, measurement, analysis, y)?;
    Ok(step_unchecked(state, measurement, analysis, y, cfg))
}

fn check_problem(
    state: &NestaState,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
) -> Result<()> {
    check_len(measurement.side(), analysis.side())?;
    check_len(measurement.m(), y.len())?;
    for grid in [&state.z, &state.qv, &state.x] {
        check_len(measurement.side(), grid.side())?;
    }
    Ok(())
}

fn step_unchecked(
    state: &NestaState,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
    cfg: &NestaConfig,
) -> NestaState {
    let n = state.iter;
    let side = state.z.side();
    let step = cfg.mu / analysis.beta();
    let grad = kernels::smoothed_gradient(analysis, state.z.as_slice(), cfg.mu);
    let qv = kernels::descend(state.qv.as_slice(), step * kernels::alpha(n), &grad);
    let qx = kernels::descend(state.z.as_slice(), step, &grad);
    let (x, _) = project_slice(&qx, measurement, y, cfg.eta);
    let (v, _) = project_slice(&qv, measurement, y, cfg.eta);
    let z = kernels::convex_step(kernels::tau(n), &v, &x);
    NestaState {
        iter: n + 1,
        z: grid(side, z),
        qv: grid(side, qv),
        x: grid(side, x),
    }
}

fn grid(side: usize, data: Vec<Complex64>) -> ImageGrid {
    ImageGrid::from_vec(side, data).expect("length preserved by construction")
}

/// Runs iterations `n = 0, ..., n_max` from `z0` and returns `x_{n_max}`.
pub fn nesta_run(
    z0: &ImageGrid,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
    cfg: &NestaConfig,
) -> Result<ImageGrid> {
    nesta_run_observed(z0, measurement, analysis, y, cfg, |_, _| {})
}

/// As [`nesta_run`], calling `observe(n, x_n)` after every iteration.
pub fn nesta_run_observed(
    z0: &ImageGrid,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
    cfg: &NestaConfig,
    mut observe: impl FnMut(usize, &ImageGrid),
) -> Result<ImageGrid> {
    cfg.validate()?;
    let mut state = NestaState::initial(z0.clone());
    check_problem(&state, measurement, analysis, y)?;
    for n in 0..=cfg.n_max {
        state = step_unchecked(&state, measurement, analysis, y, cfg);
        observe(n, &state.x);
    }
    Ok(state.x)
}
