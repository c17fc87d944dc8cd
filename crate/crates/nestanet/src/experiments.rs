//! The numerical experiments: error decay across restarts, restarted versus
//! fixed smoothing, the (eta, zeta) error grid, and the worst-case
//! perturbation search. Independent runs are spread over the current rayon
//! pool; results are always returned in a fixed order.

use std::path::PathBuf;

use nestanet_core::nesta::nesta_run_observed;
use nestanet_core::operators::vector::norm;
use nestanet_core::operators::{generate_mask, MaskDensityConfig};
use nestanet_core::phantom::{preset, render_phantom, PRESETS};
use nestanet_core::restart::{
    build_schedule, default_eps0, delta_for_inner_iterations, inner_iterations, ScheduleParams,
};
use nestanet_core::stability::{collect_search, run_trial, PerturbConfig, PerturbSearch};
use nestanet_core::{
    AnalysisOperator, Complex64, ImageGrid, InitialPoint, MeasurementOperator, NestaConfig, RestartSchedule,
    RestartedNesta, SamplingMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::imageio::load_grayscale;
use crate::maskio::read_mask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageSource {
    Preset(String),
    File(PathBuf),
}

/// Ground truth, sampling pattern and analysis weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub side: usize,
    pub sampling: f64,
    pub lambda: f64,
    pub seed: u64,
    pub image: ImageSource,
    /// Mask file to use instead of generating one.
    pub mask_file: Option<PathBuf>,
}

impl Problem {
    pub fn phantom(side: usize, sampling: f64, seed: u64) -> Self {
        Self {
            side,
            sampling,
            lambda: 2.5,
            seed,
            image: ImageSource::Preset("head".into()),
            mask_file: None,
        }
    }
}

/// Restart schedule parameters. `inner_iters` and `delta` are both stored
/// after resolution so a manifest fixes them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub r: f64,
    pub zeta: f64,
    pub restarts: usize,
    pub inner_iters: usize,
    pub delta: f64,
    pub init: InitKind,
    pub eps0: Eps0Rule,
}

/// How the first error bound `eps_0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eps0Rule {
    /// `max(||x||, zeta)` from the known ground truth.
    Truth,
    /// `||A^dagger y||`, computable from the data alone.
    PseudoInverse,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Zero,
    PseudoInverse,
}

impl From<InitKind> for InitialPoint {
    fn from(k: InitKind) -> Self {
        match k {
            InitKind::Zero => InitialPoint::Zero,
            InitKind::PseudoInverse => InitialPoint::PseudoInverse,
        }
    }
}

/// How the inner iteration count is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSpec {
    Delta(f64),
    Iterations(usize),
}

impl SolverParams {
    /// Resolves `delta` and `n_k` for a problem of side `side`, analysis
    /// weight `lambda`.
    pub fn resolve(side: usize, lambda: f64, r: f64, zeta: f64, restarts: usize, inner: InnerSpec) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(HarnessError::Invalid("r must lie in (0, 1)".into()));
        }
        let beta = 1.0 + 8.0 * lambda;
        let coeff_dim = 3 * side * side;
        let (inner_iters, delta) = match inner {
            InnerSpec::Delta(d) if d > 0.0 && d.is_finite() => (inner_iterations(beta, r, d, coeff_dim), d),
            InnerSpec::Delta(d) => return Err(HarnessError::Invalid(format!("delta must be positive, got {d}"))),
            InnerSpec::Iterations(n) => (n, delta_for_inner_iterations(n, beta, r, coeff_dim)),
        };
        Ok(Self {
            r,
            zeta,
            restarts,
            inner_iters,
            delta,
            init: InitKind::Zero,
            eps0: Eps0Rule::Truth,
        })
    }
}

/// A fully built measurement problem.
pub struct Instance {
    pub x: ImageGrid,
    pub measurement: MeasurementOperator,
    pub analysis: AnalysisOperator,
    pub mask_seed: u64,
}

impl Instance {
    pub fn mask(&self) -> &SamplingMask {
        self.measurement.mask()
    }

    /// `A x + e` with `||e|| = noise` exactly (no noise when `noise == 0`).
    pub fn measurements(&self, noise: f64, seed: u64, stream: u64) -> Result<Vec<Complex64>> {
        let mut y = self.measurement.measure(&self.x)?;
        if noise > 0.0 {
            let e = gaussian_noise(y.len(), noise, seed, stream);
            y.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
        }
        Ok(y)
    }

    /// Schedule from `params`, resolving `eps_0` against this instance.
    pub fn schedule(&self, params: &SolverParams, y: &[Complex64]) -> Result<RestartSchedule> {
        let eps0 = match params.eps0 {
            Eps0Rule::Truth => self.x.norm().max(params.zeta),
            Eps0Rule::PseudoInverse => default_eps0(&self.measurement, y)?,
            Eps0Rule::Value(v) => v,
        };
        self.schedule_with_eps0(params, eps0)
    }

    pub fn schedule_with_eps0(&self, params: &SolverParams, eps0: f64) -> Result<RestartSchedule> {
        let mut p = ScheduleParams::new(
            params.delta,
            eps0,
            params.restarts,
            self.analysis.beta(),
            self.analysis.m(),
        );
        p.r = params.r;
        p.zeta = params.zeta;
        let s = build_schedule(&p)?;
        debug_assert_eq!(s.inner_iters(), params.inner_iters);
        Ok(s)
    }

    pub fn rel_err(&self, x: &ImageGrid) -> f64 {
        x.distance(&self.x) / self.x.norm()
    }
}

/// Noise streams start here so they never collide with mask draws.
const NOISE_STREAM: u64 = 1 << 32;

/// Complex Gaussian vector rescaled to norm exactly `level`.
pub fn gaussian_noise(len: usize, level: f64, seed: u64, stream: u64) -> Vec<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM + stream);
    let mut e: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let scale = level / norm(&e);
    e.iter_mut().for_each(|v| *v *= scale);
    e
}

pub fn load_image(problem: &Problem) -> Result<ImageGrid> {
    match &problem.image {
        ImageSource::Preset(name) => {
            let ellipses = preset(name).ok_or_else(|| {
                HarnessError::Invalid(format!("unknown phantom {name:?}; known: {}", PRESETS.join(", ")))
            })?;
            Ok(render_phantom(problem.side, &ellipses)?)
        }
        ImageSource::File(path) => {
            let img = load_grayscale(path)?;
            if img.side() != problem.side {
                return Err(HarnessError::Invalid(format!(
                    "image side {} does not match --side {}",
                    img.side(),
                    problem.side
                )));
            }
            Ok(img)
        }
    }
}

pub fn build_instance(problem: &Problem) -> Result<Instance> {
    let x = load_image(problem)?;
    let (mask, mask_seed) = match &problem.mask_file {
        Some(path) => {
            let (mask, seed) = read_mask(path)?;
            if mask.side() != problem.side {
                return Err(HarnessError::Invalid(format!(
                    "mask side {} does not match --side {}",
                    mask.side(),
                    problem.side
                )));
            }
            (mask, seed)
        }
        None => {
            if !(problem.sampling > 0.0 && problem.sampling <= 1.0) {
                return Err(HarnessError::Invalid("sampling rate must lie in (0, 1]".into()));
            }
            let cfg = MaskDensityConfig::with_rate(problem.side, problem.sampling, problem.seed);
            (generate_mask(&cfg)?, problem.seed)
        }
    };
    Ok(Instance {
        x,
        measurement: MeasurementOperator::new(mask)?,
        analysis: AnalysisOperator::new(problem.side, problem.lambda)?,
        mask_seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub eta: f64,
    pub k: usize,
    pub rel_err: f64,
}

/// Relative error of every restart output `x*_1, ..., x*_{K+1}` for each
/// noise level; measurements carry noise of norm exactly `eta`.
pub fn exp_decay(problem: &Problem, solver: &SolverParams, etas: &[f64]) -> Result<Vec<DecayRow>> {
    let inst = build_instance(problem)?;
    let per_eta: Vec<Vec<DecayRow>> = etas
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let y = inst.measurements(eta, problem.seed, i as u64)?;
            let schedule = inst.schedule(solver, &y)?;
            let run = RestartedNesta::new(&inst.measurement, &inst.analysis, &schedule, eta)
                .with_init(solver.init.into());
            let x0 = run.init.resolve(&inst.measurement, &y)?;
            let (_, outputs) = run.run_from(&x0, &y, |_, _, _| {})?;
            Ok(outputs
                .iter()
                .enumerate()
                .map(|(k, x)| DecayRow {
                    eta,
                    k: k + 1,
                    rel_err: inst.rel_err(x),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_eta.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub variant: String,
    pub total_iter: usize,
    pub rel_err: f64,
}

pub const RESTARTED: &str = "restarted";

pub fn fixed_variant(mu: f64) -> String {
    format!("fixed_mu={mu:e}")
}

/// Per-iteration relative error of restarted NESTA and of plain NESTA with
/// each fixed `mu`, all with the same total iteration budget.
pub fn compare(problem: &Problem, solver: &SolverParams, eta: f64, mus: &[f64]) -> Result<Vec<CompareRow>> {
    let inst = build_instance(problem)?;
    let y = inst.measurements(eta, problem.seed, 0)?;
    let schedule = inst.schedule(solver, &y)?;
    let budget = schedule.total_iterations();
    let init: InitialPoint = solver.init.into();
    let x0 = init.resolve(&inst.measurement, &y)?;

    let variants: Vec<Option<f64>> = std::iter::once(None).chain(mus.iter().map(|&m| Some(m))).collect();
    let per_variant: Vec<Vec<CompareRow>> = variants
        .par_iter()
        .map(|variant| {
            let mut errs = Vec::with_capacity(budget);
            match variant {
                None => {
                    RestartedNesta::new(&inst.measurement, &inst.analysis, &schedule, eta)
                        .run_from(&x0, &y, |_, _, x| errs.push(inst.rel_err(x)))?;
                }
                Some(mu) => {
                    let cfg = NestaConfig::new(*mu, eta, budget - 1)?;
                    nesta_run_observed(&x0, &inst.measurement, &inst.analysis, &y, &cfg, |_, x| {
                        errs.push(inst.rel_err(x))
                    })?;
                }
            }
            let name = variant.map_or_else(|| RESTARTED.to_string(), fixed_variant);
            Ok(errs
                .into_iter()
                .enumerate()
                .map(|(t, rel_err)| CompareRow {
                    variant: name.clone(),
                    total_iter: t + 1,
                    rel_err,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_variant.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourRow {
    pub eta: f64,
    pub zeta: f64,
    pub err: f64,
}

/// Absolute error `||x_hat - x||` of the final iterate on noiseless data for
/// every `(eta, zeta)` pair, `eta` varying slowest.
pub fn contour(problem: &Problem, solver: &SolverParams, etas: &[f64], zetas: &[f64]) -> Result<Vec<ContourRow>> {
    let inst = build_instance(problem)?;
    let y = inst.measurements(0.0, problem.seed, 0)?;
    let init: InitialPoint = solver.init.into();
    let x0 = init.resolve(&inst.measurement, &y)?;
    let grid: Vec<(f64, f64)> = etas.iter().flat_map(|&e| zetas.iter().map(move |&z| (e, z))).collect();
    grid.par_iter()
        .map(|&(eta, zeta)| {
            let params = SolverParams { zeta, ..solver.clone() };
            let schedule = inst.schedule(&params, &y)?;
            let (x, _) = RestartedNesta::new(&inst.measurement, &inst.analysis, &schedule, eta).run_from(
                &x0,
                &y,
                |_, _, _| {},
            )?;
            Ok(ContourRow {
                eta,
                zeta,
                err: x.distance(&inst.x),
            })
        })
        .collect()
}

/// Result of the perturbation search at one radius.
#[derive(Debug, Clone)]
pub struct StabilityOutcome {
    pub eta_tilde: f64,
    pub search: PerturbSearch,
    /// `N(y)`.
    pub reference: ImageGrid,
    /// `N(y + e_best)`.
    pub perturbed: ImageGrid,
    /// `A^dagger e_best`.
    pub perturbation: ImageGrid,
}

impl StabilityOutcome {
    /// `||N(y + e) - N(y)|| / eta_tilde`.
    pub fn amplification(&self) -> f64 {
        self.perturbed.distance(&self.reference) / self.eta_tilde
    }

    pub fn difference(&self) -> ImageGrid {
        let d = self
            .perturbed
            .as_slice()
            .iter()
            .zip(self.reference.as_slice())
            .map(|(a, b)| a - b)
            .collect();
        ImageGrid::from_vec(self.reference.side(), d).expect("same side")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub trials: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    pub tape_budget: u64,
}

/// Worst-case perturbation search on noiseless measurements for each radius.
/// Trials run in parallel; every radius reuses the same trial seeds.
pub fn stability(
    problem: &Problem,
    solver: &SolverParams,
    eta: f64,
    eta_tildes: &[f64],
    search: &SearchParams,
) -> Result<Vec<StabilityOutcome>> {
    let inst = build_instance(problem)?;
    let y = inst.measurements(0.0, problem.seed, 0)?;
    let schedule = inst.schedule(solver, &y)?;
    let run =
        RestartedNesta::new(&inst.measurement, &inst.analysis, &schedule, eta).with_init(solver.init.into());
    let reference = run.reconstruct(&y)?;
    eta_tildes
        .iter()
        .map(|&eta_tilde| {
            let cfg = PerturbConfig {
                eta_tilde,
                trials: search.trials,
                steps: search.steps,
                step_size: search.step_size,
                seed: search.seed,
                tape_budget: search.tape_budget,
            };
            cfg.validate()?;
            let trials = (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(&run, &y, &reference, &cfg, t))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let found = collect_search(trials)?;
            let yp: Vec<Complex64> = y.iter().zip(&found.e_best).map(|(a, b)| a + b).collect();
            let perturbed = run.reconstruct(&yp)?;
            let perturbation = inst.measurement.pseudo_inverse(&found.e_best)?;
            Ok(StabilityOutcome {
                eta_tilde,
                search: found,
                reference: reference.clone(),
                perturbed,
                perturbation,
            })
        })
        .collect()
}

/// Restarted reconstruction from `A x + e`, `||e|| = noise`.
pub fn recover(problem: &Problem, solver: &SolverParams, eta: f64, noise: f64) -> Result<(Instance, ImageGrid)> {
    let inst = build_instance(problem)?;
    let y = inst.measurements(noise, problem.seed, 0)?;
    let x = if norm(&y) == 0.0 {
        ImageGrid::zeros(problem.side)?
    } else {
        let schedule = inst.schedule(solver, &y)?;
        RestartedNesta::new(&inst.measurement, &inst.analysis, &schedule, eta)
            .with_init(solver.init.into())
            .reconstruct(&y)?
    };
    Ok((inst, x))
}
