//! Restarted NESTA and its parameter schedules.
//!
//! Each restart `k = 1..=K+1` runs NESTA from the previous output with
//! smoothing `mu_k = r delta eps_{k-1}` and a fixed inner count
//! `n = ceil(2 sqrt(beta) / (r delta sqrt(M))) - 1`, where
//! `eps_0` is an initial error estimate and `eps_k = r eps_{k-1} + zeta`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::ImageGrid;
use crate::math;
use crate::nesta::{nesta_run_observed, NestaConfig};
use crate::operators::{best_s_term_error, AnalysisOperator, MeasurementOperator};

/// Inputs to [`build_schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    /// Error decay factor per restart, `0 < r < 1`.
    pub r: f64,
    pub delta: f64,
    /// Target error floor.
    pub zeta: f64,
    /// Initial error estimate `eps_0`.
    pub eps0: f64,
    /// Number of restarts `K`; the solver runs `K + 1` NESTA calls.
    pub restarts: usize,
    /// Upper frame bound of the analysis operator.
    pub beta: f64,
    /// Analysis coefficient dimension `M`.
    pub coeff_dim: usize,
    /// Lower clamp for every `mu_k`.
    pub mu_floor: f64,
}

impl ScheduleParams {
    /// Defaults `r = 1/4`, `zeta = 1e-9`, `mu_floor = 1e-13 max(1, eps0)`.
    pub fn new(delta: f64, eps0: f64, restarts: usize, beta: f64, coeff_dim: usize) -> Self {
        Self {
            r: 0.25,
            delta,
            zeta: 1e-9,
            eps0,
            restarts,
            beta,
            coeff_dim,
            mu_floor: default_mu_floor(eps0),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::invalid("r", "must lie strictly between 0 and 1"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be positive and finite"));
        }
        if !(self.zeta >= 0.0) || !self.zeta.is_finite() {
            return Err(Error::invalid("zeta", "must be nonnegative and finite"));
        }
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return Err(Error::invalid("eps0", "must be positive and finite"));
        }
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(Error::invalid("beta", "must be at least 1"));
        }
        if self.coeff_dim == 0 {
            return Err(Error::invalid("coeff_dim", "must be positive"));
        }
        if !(self.mu_floor > 0.0) {
            return Err(Error::invalid("mu_floor", "must be positive"));
        }
        Ok(())
    }
}

pub fn default_mu_floor(eps0: f64) -> f64 {
    1e-13 * eps0.max(1.0)
}

/// Inner iteration count `ceil(2 sqrt(beta) / (r delta sqrt(M))) - 1`.
pub fn inner_iterations(beta: f64, r: f64, delta: f64, coeff_dim: usize) -> usize {
    let raw = math::ceil(2.0 * math::sqrt(beta) / (r * delta * math::sqrt(coeff_dim as f64)));
    (raw.max(1.0) - 1.0) as usize
}

/// A `delta` for which [`inner_iterations`] returns exactly `inner`.
pub fn delta_for_inner_iterations(inner: usize, beta: f64, r: f64, coeff_dim: usize) -> f64 {
    // aim at the middle of the ceil bucket
    2.0 * math::sqrt(beta) / (r * math::sqrt(coeff_dim as f64) * (inner as f64 + 0.5))
}

/// Per-restart smoothing parameters and the inner iteration count.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartSchedule {
    params: Option<ScheduleParams>,
    mu: Vec<f64>,
    eps: Vec<f64>,
    inner_iters: usize,
    clamped: bool,
}

/// Builds `(mu_k, n_k)` for `k = 1..=K+1`.
pub fn build_schedule(params: &ScheduleParams) -> Result<RestartSchedule> {
    params.validate()?;
    let p = *params;
    let mut eps = Vec::with_capacity(p.restarts + 2);
    eps.push(p.eps0);
    for k in 1..=p.restarts + 1 {
        eps.push(p.r * eps[k - 1] + p.zeta);
    }
    let mut clamped = false;
    let mu = (1..=p.restarts + 1)
        .map(|k| {
            let raw = p.r * p.delta * eps[k - 1];
            if raw <= p.mu_floor {
                clamped = true;
                p.mu_floor
            } else {
                raw
            }
        })
        .collect();
    Ok(RestartSchedule {
        params: Some(p),
        mu,
        eps,
        inner_iters: inner_iterations(p.beta, p.r, p.delta, p.coeff_dim),
        clamped,
    })
}

impl RestartSchedule {
    /// An explicit schedule, one NESTA call per entry of `mu`, each running
    /// `inner_iters + 1` iterations.
    pub fn from_parts(mu: Vec<f64>, inner_iters: usize) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("mu", "schedule needs at least one entry"));
        }
        if mu.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid("mu", "entries must be positive and finite"));
        }
        Ok(Self {
            params: None,
            mu,
            eps: Vec::new(),
            inner_iters,
            clamped: false,
        })
    }

    pub fn params(&self) -> Option<&ScheduleParams> {
        self.params.as_ref()
    }

    /// `mu_1, ..., mu_{K+1}`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `eps_0, ..., eps_{K+1}` (empty for explicit schedules).
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// `n_k`, constant across restarts.
    pub fn inner_iters(&self) -> usize {
        self.inner_iters
    }

    /// Number of restarts `K`.
    pub fn restarts(&self) -> usize {
        self.mu.len() - 1
    }

    /// Whether any `mu_k` was raised to the floor.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// NESTA iterations over the whole run, `(K + 1)(n + 1)`.
    pub fn total_iterations(&self) -> usize {
        self.mu.len() * (self.inner_iters + 1)
    }

    /// Closed form `r^k eps_0 + (1 - r^k) / (1 - r) zeta`.
    pub fn eps_closed_form(&self, k: usize) -> Option<f64> {
        let p = self.params?;
        let rk = math::powi(p.r, k as i32);
        Some(rk * p.eps0 + (1.0 - rk) / (1.0 - p.r) * p.zeta)
    }
}

/// Constants of the robust null space property assumed for `(A, W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub rho: f64,
    pub gamma: f64,
    pub s: usize,
}

impl TheoryConstants {
    pub fn new(rho: f64, gamma: f64, s: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid("rho", "must lie strictly between 0 and 1"));
        }
        if !(gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if s == 0 {
            return Err(Error::invalid("s", "must be positive"));
        }
        Ok(Self { rho, gamma, s })
    }

    /// `(1 + rho)^2 / (1 - rho)`.
    pub fn c1(&self) -> f64 {
        (1.0 + self.rho) * (1.0 + self.rho) / (1.0 - self.rho)
    }

    /// `(3 + rho) gamma / (1 - rho)`.
    pub fn c2(&self) -> f64 {
        (3.0 + self.rho) * self.gamma / (1.0 - self.rho)
    }

    /// `sqrt(s) / (c1 M)`.
    pub fn delta(&self, coeff_dim: usize) -> f64 {
        math::sqrt(self.s as f64) / (self.c1() * coeff_dim as f64)
    }

    /// `zeta = 2 c1 sigma_s / sqrt(s) + 2 c2 eta`.
    pub fn zeta(&self, sigma_s: f64, eta: f64) -> f64 {
        2.0 * self.c1() * sigma_s / math::sqrt(self.s as f64) + 2.0 * self.c2() * eta
    }
}

/// Schedule with `delta` derived from the null space constants.
pub fn theoretical_schedule(
    tc: &TheoryConstants,
    beta: f64,
    coeff_dim: usize,
    r: f64,
    zeta: f64,
    eps0: f64,
    restarts: usize,
) -> Result<RestartSchedule> {
    build_schedule(&ScheduleParams {
        r,
        delta: tc.delta(coeff_dim),
        zeta,
        eps0,
        restarts,
        beta,
        coeff_dim,
        mu_floor: default_mu_floor(eps0),
    })
}

/// Compressed sensing error `sigma_s(W^* x)_1 / sqrt(s) + eta`.
pub fn cs_error(analysis: &AnalysisOperator, x: &ImageGrid, s: usize, eta: f64) -> Result<f64> {
    if s == 0 || s > analysis.m() {
        return Err(Error::invalid("s", "must lie in 1..=M"));
    }
    let coeffs = analysis.analysis_apply(x)?;
    Ok(best_s_term_error(&coeffs, s)? / math::sqrt(s as f64) + eta)
}

/// `||A^dagger y||`, a computable stand-in for `||x||` when choosing `eps_0`.
pub fn default_eps0(measurement: &MeasurementOperator, y: &[Complex64]) -> Result<f64> {
    Ok(measurement.pseudo_inverse(y)?.norm())
}

/// Starting point `x*_0` of the restarted solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialPoint {
    #[default]
    Zero,
    /// `nu^{-1} A^* y`.
    PseudoInverse,
}

impl InitialPoint {
    pub fn resolve(&self, measurement: &MeasurementOperator, y: &[Complex64]) -> Result<ImageGrid> {
        match self {
            InitialPoint::Zero => ImageGrid::zeros(measurement.side()),
            InitialPoint::PseudoInverse => measurement.pseudo_inverse(y),
        }
    }
}

/// Restarted NESTA with its operators and parameters bound, viewed as the
/// reconstruction map `y -> x*_{K+1}`.
#[derive(Debug, Clone, Copy)]
pub struct RestartedNesta<'a> {
    pub measurement: &'a MeasurementOperator,
    pub analysis: &'a AnalysisOperator,
    pub schedule: &'a RestartSchedule,
    pub eta: f64,
    pub init: InitialPoint,
}

impl<'a> RestartedNesta<'a> {
    pub fn new(
        measurement: &'a MeasurementOperator,
        analysis: &'a AnalysisOperator,
        schedule: &'a RestartSchedule,
        eta: f64,
    ) -> Self {
        Self {
            measurement,
            analysis,
            schedule,
            eta,
            init: InitialPoint::Zero,
        }
    }

    pub fn with_init(mut self, init: InitialPoint) -> Self {
        self.init = init;
        self
    }

    pub(crate) fn check(&self, y: &[Complex64]) -> Result<()> {
        check_len(self.measurement.side(), self.analysis.side())?;
        check_len(self.measurement.m(), y.len())?;
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid("eta", "must be positive and finite"));
        }
        Ok(())
    }

    /// Final reconstruction `x*_{K+1}`.
    pub fn reconstruct(&self, y: &[Complex64]) -> Result<ImageGrid> {
        let x0 = self.init.resolve(self.measurement, y)?;
        Ok(self.run_from(&x0, y, |_, _, _| {})?.0)
    }

    /// Runs from `x0`, returning `x*_{K+1}` and the restart outputs
    /// `x*_1, ..., x*_{K+1}`. `observe(k, n, x_n)` sees every inner iterate
    /// (`k` is 1-based).
    pub fn run_from(
        &self,
        x0: &ImageGrid,
        y: &[Complex64],
        mut observe: impl FnMut(usize, usize, &ImageGrid),
    ) -> Result<(ImageGrid, Vec<ImageGrid>)> {
        self.check(y)?;
        let mut current = x0.clone();
        let mut outputs = Vec::with_capacity(self.schedule.mu().len());
        for (k, &mu) in self.schedule.mu().iter().enumerate() {
            let cfg = NestaConfig::new(mu, self.eta, self.schedule.inner_iters())?;
            current = nesta_run_observed(&current, self.measurement, self.analysis, y, &cfg, |n, x| {
                observe(k + 1, n, x)
            })?;
            outputs.push(current.clone());
        }
        Ok((current, outputs))
    }
}

/// Restarted NESTA from `x_init`; returns the final iterate and every
/// restart output.
pub fn restarted_run(
    x_init: &ImageGrid,
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    y: &[Complex64],
    eta: f64,
    schedule: &RestartSchedule,
) -> Result<(ImageGrid, Vec<ImageGrid>)> {
    RestartedNesta::new(measurement, analysis, schedule, eta).run_from(x_init, y, |_, _, _| {})
}
