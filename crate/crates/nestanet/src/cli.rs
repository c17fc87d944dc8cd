//! Command line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nestanet_core::unrolled::network_dims;

use crate::error::{HarnessError, Result};
use crate::experiments::{
    build_instance, Eps0Rule, ImageSource, InitKind, InnerSpec, Problem, SearchParams, SolverParams,
};
use crate::manifest::{self, Experiment, Manifest};

const DESK_SIDE: usize = 64;
const PAPER_SIDE: usize = 512;

#[derive(Debug, Parser)]
#[command(name = "nestanet", version, about = "Restarted NESTA experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Image side length (power of two).
    #[arg(long, global = true)]
    pub side: Option<usize>,
    /// Target sampling rate in (0, 1].
    #[arg(long, global = true)]
    pub sampling: Option<f64>,
    /// Weight of the gradient part of the analysis operator.
    #[arg(long, global = true, default_value_t = 2.5)]
    pub lambda: f64,
    /// Restart contraction factor.
    #[arg(long, global = true, default_value_t = 0.25)]
    pub r: f64,
    /// Smoothing constant; sets the inner iteration count.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Inner iteration count; sets delta.
    #[arg(long, global = true)]
    pub inner_iters: Option<usize>,
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    /// Noise level assumed by the solver.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Use the full-size problem (side 512) and full search budgets.
    #[arg(long, global = true)]
    pub paper_scale: bool,
    /// Built-in phantom: head, shepp-logan or disk.
    #[arg(long, global = true, default_value = "head")]
    pub phantom: String,
    /// Grayscale PNG or PGM ground truth, overrides --phantom.
    #[arg(long, global = true)]
    pub image: Option<PathBuf>,
    /// Mask file to reuse instead of drawing a new one.
    #[arg(long, global = true)]
    pub mask: Option<PathBuf>,
    /// First error bound: truth, pinv or a number.
    #[arg(long, global = true, default_value = "truth")]
    pub eps0: String,
    #[arg(long, global = true, value_enum, default_value_t = InitArg::Zero)]
    pub init: InitArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Zero,
    Pinv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error after every restart for several noise levels.
    ExpDecay {
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
    },
    /// Restarted NESTA against fixed smoothing at equal iteration budget.
    Compare {
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<f64>>,
    },
    /// Final error over a grid of (eta, zeta) on noiseless data.
    Contour {
        /// Exponents -1..7 instead of -1..4.
        #[arg(long)]
        full_grid: bool,
    },
    /// Worst-case measurement perturbation search.
    Stability {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 3.0)]
        step_size: f64,
        /// Number of radii eta * 10^i, i = 0, 1, ...
        #[arg(long, default_value_t = 4)]
        decades: u32,
        /// Per-trial tape limit in GiB.
        #[arg(long, default_value_t = 4.0)]
        tape_budget_gib: f64,
    },
    /// One reconstruction.
    Recover {
        /// Norm of the added measurement noise, defaults to eta.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Draw a sampling mask and save it.
    Mask,
    /// Print depth and widths of the unrolled network.
    Dims,
    /// Rerun the experiment recorded in a manifest.
    Replay { manifest: PathBuf },
}

struct Defaults {
    sampling: f64,
    restarts: usize,
    inner: usize,
    eta: f64,
}

fn defaults(cmd: &Command) -> Defaults {
    let (sampling, restarts, inner, eta) = match cmd {
        Command::Contour { .. } => (0.25, 14, 33, 1e-3),
        Command::Stability { .. } | Command::Dims => (0.25, 9, 17, 1e-2),
        Command::Compare { .. } => (0.15, 11, 33, 1e-3),
        _ => (0.15, 14, 33, 1e-3),
    };
    Defaults {
        sampling,
        restarts,
        inner,
        eta,
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::ExpDecay { .. } => "exp-decay",
        Command::Compare { .. } => "compare",
        Command::Contour { .. } => "contour",
        Command::Stability { .. } => "stability",
        Command::Recover { .. } => "recover",
        Command::Mask => "mask",
        Command::Dims => "dims",
        Command::Replay { .. } => "replay",
    }
}

fn parse_eps0(s: &str) -> Result<Eps0Rule> {
    match s {
        "truth" => Ok(Eps0Rule::Truth),
        "pinv" => Ok(Eps0Rule::PseudoInverse),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|x| *x > 0.0 && x.is_finite())
            .map(Eps0Rule::Value)
            .ok_or_else(|| HarnessError::Invalid(format!("--eps0 expects truth, pinv or a positive number, got {v}"))),
    }
}

fn decades(eta: f64, count: i32) -> Vec<f64> {
    (0..count).map(|i| eta * 10f64.powi(i)).collect()
}

fn grid(full: bool) -> Vec<f64> {
    let last = if full { 7 } else { 4 };
    (-1..=last).map(|i| 10f64.powi(-i)).collect()
}

fn problem(g: &GlobalArgs, d: &Defaults) -> Problem {
    Problem {
        side: g.side.unwrap_or(if g.paper_scale { PAPER_SIDE } else { DESK_SIDE }),
        sampling: g.sampling.unwrap_or(d.sampling),
        lambda: g.lambda,
        seed: g.seed,
        image: match &g.image {
            Some(p) => ImageSource::File(p.clone()),
            None => ImageSource::Preset(g.phantom.clone()),
        },
        mask_file: g.mask.clone(),
    }
}

fn solver(g: &GlobalArgs, d: &Defaults, side: usize) -> Result<SolverParams> {
    let inner = match (g.delta, g.inner_iters) {
        (Some(_), Some(_)) => {
            return Err(HarnessError::Invalid("--delta and --inner-iters are exclusive".into()));
        }
        (Some(delta), None) => InnerSpec::Delta(delta),
        (None, Some(n)) => InnerSpec::Iterations(n),
        (None, None) => InnerSpec::Iterations(d.inner),
    };
    let mut solver = SolverParams::resolve(
        side,
        g.lambda,
        g.r,
        g.zeta.unwrap_or(1e-9),
        g.restarts.unwrap_or(d.restarts),
        inner,
    )?;
    solver.eps0 = parse_eps0(&g.eps0)?;
    solver.init = match g.init {
        InitArg::Zero => InitKind::Zero,
        InitArg::Pinv => InitKind::PseudoInverse,
    };
    Ok(solver)
}

/// Turns parsed arguments into a resolved experiment.
pub fn resolve(g: &GlobalArgs, cmd: &Command) -> Result<Experiment> {
    let d = defaults(cmd);
    let problem = problem(g, &d);
    let solver = solver(g, &d, problem.side)?;
    let eta = g.eta.unwrap_or(d.eta);

    Ok(match cmd {
        Command::ExpDecay { etas } => Experiment::ExpDecay {
            problem,
            solver,
            etas: etas.clone().unwrap_or_else(|| vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4]),
        },
        Command::Compare { mus } => Experiment::Compare {
            problem,
            solver,
            eta,
            mus: mus.clone().unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4, 1e-5]),
        },
        Command::Contour { full_grid } => Experiment::Contour {
            problem,
            solver,
            etas: grid(*full_grid),
            zetas: grid(*full_grid),
        },
        Command::Stability {
            trials,
            steps,
            step_size,
            decades: count,
            tape_budget_gib,
        } => {
            let (t, s) = if g.paper_scale { (400, 150) } else { (8, 40) };
            if !tape_budget_gib.is_finite() || *tape_budget_gib <= 0.0 {
                return Err(HarnessError::Invalid("--tape-budget-gib must be positive".into()));
            }
            Experiment::Stability {
                problem,
                solver,
                eta,
                eta_tildes: decades(eta, *count as i32),
                search: SearchParams {
                    trials: trials.unwrap_or(t),
                    steps: steps.unwrap_or(s),
                    step_size: *step_size,
                    seed: g.seed,
                    tape_budget: (*tape_budget_gib * (1u64 << 30) as f64) as u64,
                },
            }
        }
        Command::Recover { noise } => Experiment::Recover {
            problem,
            solver,
            eta,
            noise: noise.unwrap_or(eta),
        },
        Command::Mask => Experiment::Mask { problem },
        Command::Dims | Command::Replay { .. } => {
            return Err(HarnessError::Invalid(format!("{} is not an experiment", command_name(cmd))));
        }
    })
}

fn report(manifest: &Manifest, out: &Path) {
    println!(
        "wrote {} files to {} (m = {}, {:.2} s)",
        manifest.outputs.len() + 1,
        out.display(),
        manifest.realized_m,
        manifest.duration_seconds
    );
    for (key, value) in &manifest.summary {
        println!("{key} = {value:e}");
    }
}

fn dims(g: &GlobalArgs) -> Result<()> {
    let d = defaults(&Command::Dims);
    let problem = problem(g, &d);
    let solver = solver(g, &d, problem.side)?;
    let inst = build_instance(&problem)?;
    let (n, mm, m) = (inst.measurement.n(), inst.analysis.m(), inst.measurement.m());
    let (restarts, inner) = (solver.restarts, solver.inner_iters);
    let nd = network_dims(restarts, inner, n, mm, m)?;
    println!("N = {n}, M = {mm}, m = {m}, K = {restarts}, inner iterations = {inner}");
    println!("L = {}", nd.depth);
    println!("max width = {} (bound 3N + M = {})", nd.max_width, 3 * n + mm);
    println!("activations = {}", nd.activation_kinds);
    println!(
        "widths: input {}, block {:?} x {}, output {}",
        nd.layer_widths[0],
        &nd.layer_widths[1..6],
        (restarts + 1) * (inner + 1),
        nd.layer_widths[nd.depth]
    );
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if g.paper_scale {
        eprintln!("warning: --paper-scale runs take hours and need several GiB of memory");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build()
        .map_err(|e| HarnessError::Invalid(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Dims => dims(g),
        Command::Replay { manifest: path } => {
            let out = g
                .out
                .clone()
                .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("replay"));
            let m = pool.install(|| manifest::replay(path, &out))?;
            report(&m, &out);
            Ok(())
        }
        cmd => {
            let exp = resolve(g, cmd)?;
            let out = g
                .out
                .clone()
                .unwrap_or_else(|| Path::new("runs").join(command_name(cmd)));
            let m = pool.install(|| manifest::run(&exp, &out))?;
            report(&m, &out);
            Ok(())
        }
    }
}
