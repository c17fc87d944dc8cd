//! Search for measurement perturbations that move the reconstruction most.
//!
//! Maximises `||N(y) - N(y + e)||^2` over `||e|| <= eta_tilde` by projected
//! gradient ascent, where `N` is the restarted solver and gradients come from
//! [`crate::tape`]. Each trial starts from a point drawn uniformly in the
//! ball of radius `eta_tilde / sqrt(m)` and owns its RNG stream, so results do
//! not depend on how trials are scheduled.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::grid::ImageGrid;
use crate::operators::vector::norm_sqr;
use crate::operators::MeasurementOperator;
use crate::restart::RestartedNesta;
use crate::tape::record_solver;

pub const DEFAULT_TAPE_BUDGET: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbConfig {
    pub eta_tilde: f64,
    pub trials: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Largest tape, in bytes, a single trial may record.
    pub tape_budget: u64,
}

impl PerturbConfig {
    /// 400 trials of 150 steps with step size 3.
    pub fn new(eta_tilde: f64, seed: u64) -> Self {
        Self {
            eta_tilde,
            trials: 400,
            steps: 150,
            step_size: 3.0,
            seed,
            tape_budget: DEFAULT_TAPE_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_tilde > 0.0) || !self.eta_tilde.is_finite() {
            return Err(Error::invalid("eta_tilde", "must be positive and finite"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be positive"));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid("step_size", "must be positive and finite"));
        }
        Ok(())
    }
}

fn perturbed(y: &[Complex64], e: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(e).map(|(a, b)| a + b).collect()
}

/// Gradient with respect to `e` of `Re <cotangent, N(y + e)>`.
pub fn vjp_solver(
    solver: &RestartedNesta<'_>,
    y: &[Complex64],
    e: &[Complex64],
    cotangent: &ImageGrid,
    budget: u64,
) -> Result<Vec<Complex64>> {
    check_len(y.len(), e.len())?;
    check_len(solver.measurement.n(), cotangent.len())?;
    let (tape, input, output) = record_solver(solver, perturbed(y, e), budget)?;
    let adj = tape.backward(output, cotangent.as_slice())?;
    Ok(adj.vector(input, y.len()))
}

/// Objective `||reference - N(y + e)||^2` and its gradient in `e`.
pub fn objective_and_gradient(
    solver: &RestartedNesta<'_>,
    y: &[Complex64],
    reference: &ImageGrid,
    e: &[Complex64],
    budget: u64,
) -> Result<(f64, Vec<Complex64>)> {
    let (tape, input, output) = record_solver(solver, perturbed(y, e), budget)?;
    let diff: Vec<Complex64> = tape
        .vector(output)
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let value = norm_sqr(&diff);
    let cot: Vec<Complex64> = diff.iter().map(|d| d * 2.0).collect();
    let adj = tape.backward(output, &cot)?;
    Ok((value, adj.vector(input, y.len())))
}

/// Point uniform in the ball of radius `radius` in `C^m = R^{2m}`.
pub fn uniform_in_ball(rng: &mut ChaCha20Rng, m: usize, radius: f64) -> Vec<Complex64> {
    let mut dir: Vec<Complex64> = (0..m)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let len = crate::math::sqrt(norm_sqr(&dir));
    let u: f64 = rng.random();
    let r = radius * libm::pow(u, 1.0 / (2 * m) as f64);
    let scale = if len > 0.0 { r / len } else { 0.0 };
    dir.iter_mut().for_each(|v| *v *= scale);
    dir
}

/// `e / max(1, ||e|| / radius)`.
pub fn project_ball(e: &mut [Complex64], radius: f64) {
    let factor = (crate::math::sqrt(norm_sqr(e)) / radius).max(1.0);
    if factor > 1.0 {
        e.iter_mut().for_each(|v| *v /= factor);
    }
}

/// Outcome of one ascent trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    /// Objective at every evaluated iterate, starting point first.
    pub objectives: Vec<f64>,
    pub best_objective: f64,
    pub best_e: Vec<Complex64>,
    /// Set when the trial stopped on a nonfinite objective or gradient.
    pub diagnostic: Option<&'static str>,
}

impl TrialResult {
    /// Running maximum of the objective trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.objectives
            .iter()
            .map(|&v| {
                best = best.max(v);
                best
            })
            .collect()
    }
}

/// RNG of trial `trial`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// One projected gradient ascent trial against `reference = N(y)`.
pub fn run_trial(
    solver: &RestartedNesta<'_>,
    y: &[Complex64],
    reference: &ImageGrid,
    cfg: &PerturbConfig,
    trial: usize,
) -> Result<TrialResult> {
    cfg.validate()?;
    let m = y.len();
    let mut rng = trial_rng(cfg.seed, trial);
    let mut e = uniform_in_ball(&mut rng, m, cfg.eta_tilde / crate::math::sqrt(m as f64));
    let mut out = TrialResult {
        trial,
        objectives: Vec::with_capacity(cfg.steps + 1),
        best_objective: f64::NEG_INFINITY,
        best_e: e.clone(),
        diagnostic: None,
    };
    for step in 0..=cfg.steps {
        let (value, grad) = objective_and_gradient(solver, y, reference, &e, cfg.tape_budget)?;
        if !value.is_finite() {
            out.diagnostic = Some("nonfinite objective");
            break;
        }
        out.objectives.push(value);
        if value > out.best_objective {
            out.best_objective = value;
            out.best_e.clone_from(&e);
        }
        if step == cfg.steps {
            break;
        }
        if grad.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            out.diagnostic = Some("nonfinite gradient");
            break;
        }
        e.iter_mut().zip(&grad).for_each(|(a, g)| *a += g * cfg.step_size);
        project_ball(&mut e, cfg.eta_tilde);
    }
    Ok(out)
}

/// Best trial, ties going to the lowest trial index.
pub fn merge(results: &[TrialResult]) -> Option<&TrialResult> {
    results.iter().fold(None, |best: Option<&TrialResult>, r| match best {
        Some(b) if b.best_objective > r.best_objective || (b.best_objective == r.best_objective && b.trial < r.trial) => {
            Some(b)
        }
        _ if r.best_objective.is_finite() => Some(r),
        _ => best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSearch {
    pub e_best: Vec<Complex64>,
    pub best_objective: f64,
    pub best_trial: usize,
    pub trials: Vec<TrialResult>,
}

/// Sequential worst-case search over `cfg.trials` trials.
pub fn worst_case_perturbation(
    solver: &RestartedNesta<'_>,
    y: &[Complex64],
    cfg: &PerturbConfig,
) -> Result<PerturbSearch> {
    cfg.validate()?;
    let reference = solver.reconstruct(y)?;
    let trials = (0..cfg.trials)
        .map(|t| run_trial(solver, y, &reference, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    collect_search(trials)
}

/// Combines finished trials into a search result.
pub fn collect_search(trials: Vec<TrialResult>) -> Result<PerturbSearch> {
    let best = merge(&trials).ok_or(Error::NonFinite("every trial diverged"))?;
    Ok(PerturbSearch {
        e_best: best.best_e.clone(),
        best_objective: best.best_objective,
        best_trial: best.trial,
        trials,
    })
}

/// `A^dagger e = nu^{-1} A^* e`, the image-domain view of a perturbation.
pub fn perturbation_to_image(e: &[Complex64], measurement: &MeasurementOperator) -> Result<ImageGrid> {
    measurement.pseudo_inverse(e)
}
