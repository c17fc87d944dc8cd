//! Run directories: every run writes its outputs, the realized mask and a
//! JSON manifest holding the resolved parameters. Replaying a manifest
//! reruns the same experiment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nestanet_core::operators::vector::norm;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};
use crate::experiments::{self, Problem, SearchParams, SolverParams};
use crate::imageio::write_modulus_png;
use crate::maskio::{file_sha256, write_mask};
use crate::tables::{self, float};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MASK_FILE: &str = "mask.txt";

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    ExpDecay {
        problem: Problem,
        solver: SolverParams,
        etas: Vec<f64>,
    },
    Compare {
        problem: Problem,
        solver: SolverParams,
        eta: f64,
        mus: Vec<f64>,
    },
    Contour {
        problem: Problem,
        solver: SolverParams,
        etas: Vec<f64>,
        zetas: Vec<f64>,
    },
    Stability {
        problem: Problem,
        solver: SolverParams,
        eta: f64,
        eta_tildes: Vec<f64>,
        search: SearchParams,
    },
    Recover {
        problem: Problem,
        solver: SolverParams,
        eta: f64,
        noise: f64,
    },
    Mask {
        problem: Problem,
    },
}

impl Experiment {
    pub fn problem(&self) -> &Problem {
        match self {
            Experiment::ExpDecay { problem, .. }
            | Experiment::Compare { problem, .. }
            | Experiment::Contour { problem, .. }
            | Experiment::Stability { problem, .. }
            | Experiment::Recover { problem, .. }
            | Experiment::Mask { problem } => problem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub software_version: String,
    pub experiment: Experiment,
    pub realized_m: usize,
    pub mask_seed: u64,
    pub mask_sha256: String,
    pub image_norm: f64,
    pub threads: usize,
    /// Files written, relative to the run directory.
    pub outputs: Vec<String>,
    /// Max-normalization constant of each PNG output.
    pub normalization: BTreeMap<String, f64>,
    /// Scalar results worth keeping next to the data.
    pub summary: BTreeMap<String, f64>,
    pub duration_seconds: f64,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

struct RunDir {
    dir: PathBuf,
    outputs: Vec<String>,
    normalization: BTreeMap<String, f64>,
    summary: BTreeMap<String, f64>,
}

impl RunDir {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        tables::write_csv(&path, header, rows)
    }

    fn image(&mut self, name: &str, image: &nestanet_core::ImageGrid) -> Result<()> {
        let path = self.path(name);
        let scale = write_modulus_png(&path, image)?;
        self.normalization.insert(name.to_string(), scale);
        Ok(())
    }
}

/// Runs `exp` on the current rayon pool, writing everything under `out`.
pub fn run(exp: &Experiment, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    fs::create_dir_all(out).map_err(io_err(out))?;
    let inst = experiments::build_instance(exp.problem())?;
    let mut dir = RunDir {
        dir: out.to_path_buf(),
        outputs: Vec::new(),
        normalization: BTreeMap::new(),
        summary: BTreeMap::new(),
    };
    let mask_path = dir.path(MASK_FILE);
    write_mask(&mask_path, inst.mask(), inst.mask_seed)?;
    let mask_sha256 = match &exp.problem().mask_file {
        Some(src) => file_sha256(src)?,
        None => file_sha256(&mask_path)?,
    };

    match exp {
        Experiment::ExpDecay { problem, solver, etas } => {
            let rows = experiments::exp_decay(problem, solver, etas)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![float(r.eta), r.k.to_string(), float(r.rel_err)])
                .collect();
            dir.csv("exp_decay.csv", &tables::EXP_DECAY_HEADER, &table)?;
        }
        Experiment::Compare {
            problem,
            solver,
            eta,
            mus,
        } => {
            let rows = experiments::compare(problem, solver, *eta, mus)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.variant.clone(), r.total_iter.to_string(), float(r.rel_err)])
                .collect();
            dir.csv("compare.csv", &tables::COMPARE_HEADER, &table)?;
        }
        Experiment::Contour {
            problem,
            solver,
            etas,
            zetas,
        } => {
            let rows = experiments::contour(problem, solver, etas, zetas)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![float(r.eta), float(r.zeta), float(r.err)])
                .collect();
            dir.csv("contour.csv", &tables::CONTOUR_HEADER, &table)?;
        }
        Experiment::Stability {
            problem,
            solver,
            eta,
            eta_tildes,
            search,
        } => {
            let outcomes = experiments::stability(problem, solver, *eta, eta_tildes, search)?;
            let mut table = Vec::new();
            for (i, o) in outcomes.iter().enumerate() {
                for t in &o.search.trials {
                    table.push(vec![float(o.eta_tilde), t.trial.to_string(), float(t.best_objective)]);
                }
                dir.image(&format!("perturbation_{i}.png"), &o.perturbation)?;
                dir.image(&format!("difference_{i}.png"), &o.difference())?;
                dir.image(&format!("reference_{i}.png"), &o.reference)?;
                dir.image(&format!("perturbed_{i}.png"), &o.perturbed)?;
                dir.summary.insert(format!("amplification_{i}"), o.amplification());
            }
            dir.csv("stability.csv", &tables::STABILITY_HEADER, &table)?;
        }
        Experiment::Recover {
            problem,
            solver,
            eta,
            noise,
        } => {
            let (inst, x) = experiments::recover(problem, solver, *eta, *noise)?;
            dir.image("reconstruction.png", &x)?;
            dir.summary.insert("rel_err".into(), inst.rel_err(&x));
            dir.summary.insert("reconstruction_norm".into(), norm(x.as_slice()));
        }
        Experiment::Mask { .. } => {}
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: exp.clone(),
        realized_m: inst.measurement.m(),
        mask_seed: inst.mask_seed,
        mask_sha256,
        image_norm: inst.x.norm(),
        threads: rayon::current_num_threads(),
        outputs: dir.outputs,
        normalization: dir.normalization,
        summary: dir.summary,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Reruns the experiment recorded in the manifest at `manifest_path`.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<Manifest> {
    let recorded = Manifest::read(manifest_path)?;
    run(&recorded.experiment, out)
}
