//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails or runs over its time limit.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nestanet::experiments::{
    self, compare, contour, exp_decay, fixed_variant, InnerSpec, Problem, SearchParams, SolverParams,
};
use nestanet::manifest::{self, Experiment};
use nestanet_core::nesta::{nesta_run_observed, project_feasible};
use nestanet_core::operators::gradient::{gradient_adjoint, gradient_forward};
use nestanet_core::operators::haar::{haar_forward, haar_inverse};
use nestanet_core::operators::vector::{distance, inner, l1_norm, norm};
use nestanet_core::operators::{generate_mask, MaskDensityConfig};
use nestanet_core::phantom::{head, render_phantom};
use nestanet_core::restart::{restarted_run, RestartSchedule, RestartedNesta};
use nestanet_core::stability::{vjp_solver, DEFAULT_TAPE_BUDGET};
use nestanet_core::tape::record_solver;
use nestanet_core::{
    forward_as_network, network_dims, AnalysisOperator, Complex64, ImageGrid, InitialPoint, MeasurementOperator,
    NestaConfig, SamplingMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<Complex64> {
    (0..len)
        .map(|_| c(scale * (rng.random::<f64>() - 0.5), scale * (rng.random::<f64>() - 0.5)))
        .collect()
}

fn random_grid(rng: &mut ChaCha8Rng, side: usize) -> ImageGrid {
    ImageGrid::from_vec(side, random_vec(rng, side * side, 1.0)).unwrap()
}

fn operator(side: usize, rate: f64, seed: u64) -> MeasurementOperator {
    MeasurementOperator::new(generate_mask(&MaskDensityConfig::with_rate(side, rate, seed)).unwrap()).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn operator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut errs: Vec<f64> = Vec::new();
    let worst = |errs: &[f64]| errs.iter().copied().fold(0.0, f64::max);

    // Measurement rows against a direct DFT sum.
    let side = 8;
    let a = operator(side, 0.3, 2);
    let x = random_grid(&mut rng, side);
    let got = a.measure(&x).unwrap();
    let scale = 1.0 / (a.m() as f64).sqrt();
    for (row, &idx) in a.mask().indices().iter().enumerate() {
        let (k1, k2) = (idx / side, idx % side);
        let mut sum = c(0.0, 0.0);
        for p in 0..side {
            for q in 0..side {
                let angle = -2.0 * std::f64::consts::PI * ((k1 * p + k2 * q) as f64) / side as f64;
                sum += x.as_slice()[p * side + q] * Complex64::from_polar(1.0, angle);
            }
        }
        errs.push((got[row] - sum * scale).norm() / (sum * scale).norm().max(1e-300));
    }
    let dft = worst(&errs);
    ensure(dft < 1e-12, || format!("measurement differs from direct DFT by {dft:e}"))?;

    for side in [16, 32, 64] {
        let a = operator(side, 0.15, side as u64);
        let w = AnalysisOperator::new(side, 2.5).unwrap();
        let x = random_grid(&mut rng, side);
        let y = random_vec(&mut rng, a.m(), 1.0);

        // A A^* = nu I
        let aay = a.measure(&a.measure_adjoint(&y).unwrap()).unwrap();
        let nu = (side * side) as f64 / a.m() as f64;
        let scaled: Vec<Complex64> = y.iter().map(|v| v * nu).collect();
        errs.push(distance(&aay, &scaled) / norm(&scaled));

        // adjoint pairs
        errs.push(rel(
            inner(&a.measure(&x).unwrap(), &y).re,
            inner(x.as_slice(), a.measure_adjoint(&y).unwrap().as_slice()).re,
        ));
        let coeffs = random_vec(&mut rng, w.m(), 1.0);
        let wx = w.analysis_apply(&x).unwrap();
        let lhs = inner(&wx, &coeffs);
        let rhs = inner(x.as_slice(), w.synthesis_apply(&coeffs).unwrap().as_slice());
        errs.push((lhs - rhs).norm() / lhs.norm());
        let g = random_vec(&mut rng, 2 * side * side, 1.0);
        let lhs = inner(&gradient_forward(&x), &g);
        let rhs = inner(x.as_slice(), gradient_adjoint(side, &g).unwrap().as_slice());
        errs.push((lhs - rhs).norm() / lhs.norm());

        // Haar orthogonality
        let h = haar_forward(&x);
        errs.push(rel(norm(&h), x.norm()));
        errs.push(haar_inverse(side, &h).unwrap().distance(&x) / x.norm());
        let x2 = random_grid(&mut rng, side);
        let lhs = inner(&h, &haar_forward(&x2));
        let rhs = inner(x.as_slice(), x2.as_slice());
        errs.push((lhs - rhs).norm() / rhs.norm());

        // frame sandwich, ||grad||^2 <= 8 by power iteration
        let e = norm(&wx).powi(2) / x.norm().powi(2);
        ensure(e >= 1.0 - 1e-12 && e <= w.beta() * (1.0 + 1e-12), || format!("frame ratio {e}"))?;
        let mut v = random_grid(&mut rng, side);
        let mut est = 0.0;
        for _ in 0..200 {
            let next = gradient_adjoint(side, &gradient_forward(&v)).unwrap();
            est = next.norm() / v.norm();
            v = ImageGrid::from_vec(side, next.as_slice().iter().map(|t| t / next.norm()).collect()).unwrap();
        }
        ensure(est <= 8.0 * (1.0 + 1e-12), || format!("||grad||^2 estimate {est} > 8"))?;
    }
    ensure(AnalysisOperator::new(8, 2.5).unwrap().beta() == 21.0, || "beta != 21".into())?;
    let worst = worst(&errs);
    ensure(worst < 1e-12, || format!("worst relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.1e}, beta = 21"))
}

fn projection_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let side = 16;
    let a = operator(side, 0.25, 3);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let q = random_grid(&mut rng, side);
        let y = random_vec(&mut rng, a.m(), 2.0);
        let eta = 0.1 * rng.random::<f64>() + 1e-3;
        let aq = a.measure(&q).unwrap();
        let diff: Vec<Complex64> = aq.iter().zip(&y).map(|(s, t)| s - t).collect();
        let dn = norm(&diff);
        if dn <= eta {
            continue;
        }
        count += 1;
        // closest point of the ball about y, lifted back through A^dagger
        let target: Vec<Complex64> = y.iter().zip(&diff).zip(&aq).map(|((t, d), s)| t + d * (eta / dn) - s).collect();
        let corr = a.measure_adjoint(&target).unwrap();
        let expect: Vec<Complex64> =
            q.as_slice().iter().zip(corr.as_slice()).map(|(s, t)| s + t / a.nu()).collect();
        let (u, lambda) = project_feasible(&q, &a, &y, eta).unwrap();
        ensure(lambda > 0.0, || "lambda = 0 on an infeasible point".into())?;
        worst = worst.max(distance(u.as_slice(), &expect) / norm(&expect));
    }
    ensure(worst < 1e-12, || format!("relative error {worst:e}"))?;
    Ok(format!("100 points, worst relative error {worst:.1e}"))
}

fn objective_bound() -> Outcome {
    let side = 32;
    let a = operator(side, 0.25, 4);
    let w = AnalysisOperator::new(side, 2.5).unwrap();
    let x = render_phantom(side, &head()).unwrap();
    let eta = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = random_vec(&mut rng, a.m(), 1.0);
    let s = 0.8 * eta / norm(&noise);
    let y: Vec<Complex64> = a.measure(&x).unwrap().iter().zip(&noise).map(|(p, q)| p + q * s).collect();
    let z0 = ImageGrid::zeros(side).unwrap();
    let truth_obj = l1_norm(&w.analysis_apply(&x).unwrap());
    let dist0 = x.distance(&z0).powi(2);
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for mu in [1.0, 0.1, 0.01] {
        let cfg = NestaConfig::new(mu, eta, 100).unwrap();
        let mut failure = None;
        nesta_run_observed(&z0, &a, &w, &y, &cfg, |n, xn| {
            let gap = l1_norm(&w.analysis_apply(xn).unwrap()) - truth_obj;
            let bound = 2.0 * w.beta() / (mu * ((n + 1) as f64).powi(2)) * dist0 + w.m() as f64 * mu / 2.0;
            let resid = distance(&a.measure(xn).unwrap(), &y);
            if (gap > bound || resid > eta * (1.0 + 1e-10)) && failure.is_none() {
                failure = Some(format!("mu={mu} n={n}: gap {gap:e}, bound {bound:e}, residual {resid:e}"));
            }
            tightest = tightest.min(bound - gap);
            checked += 1;
        })
        .unwrap();
        if let Some(f) = failure {
            return Err(f);
        }
    }
    Ok(format!("{checked} iterates over 3 mu, min slack {tightest:.3e}"))
}

fn exponential_decay() -> Outcome {
    let problem = Problem::phantom(64, 0.15, 0);
    let solver = SolverParams::resolve(64, 2.5, 0.25, 1e-9, 14, InnerSpec::Iterations(33)).unwrap();
    let etas = [1e-1, 1e-2, 1e-3];
    let rows = exp_decay(&problem, &solver, &etas).map_err(|e| e.to_string())?;
    let xnorm = experiments::build_instance(&problem).unwrap().x.norm();
    let mut notes = Vec::new();
    for &eta in &etas {
        let errs: Vec<f64> = rows.iter().filter(|r| r.eta == eta).map(|r| r.rel_err).collect();
        ensure(errs.len() == 15, || format!("eta {eta}: {} rows", errs.len()))?;
        let last = errs[errs.len() - 1];
        let mut worst_ratio: f64 = 0.0;
        for k in 0..errs.len() - 1 {
            if errs[k + 1] > 3.0 * last {
                worst_ratio = worst_ratio.max(errs[k + 1] / errs[k]);
            }
        }
        let target = eta / xnorm;
        let factor = last / target;
        ensure(worst_ratio <= 0.5, || format!("eta {eta}: decay ratio {worst_ratio:.3}"))?;
        ensure((1.0 / 3.0..=3.0).contains(&factor), || {
            format!("eta {eta}: plateau {last:e} is {factor:.2} x eta/||x||")
        })?;
        notes.push(format!("eta {eta:e}: ratio {worst_ratio:.2}, plateau {factor:.2}x"));
    }
    Ok(notes.join("; "))
}

fn restart_vs_fixed() -> Outcome {
    let problem = Problem::phantom(64, 0.15, 0);
    let solver = SolverParams::resolve(64, 2.5, 0.25, 1e-9, 11, InnerSpec::Iterations(33)).unwrap();
    let mus = [1e-2, 1e-3, 1e-4];
    let rows = compare(&problem, &solver, 1e-3, &mus).map_err(|e| e.to_string())?;
    let final_of = |variant: &str| {
        rows.iter()
            .filter(|r| r.variant == variant)
            .max_by_key(|r| r.total_iter)
            .map(|r| (r.total_iter, r.rel_err))
            .unwrap()
    };
    let (budget, restarted) = final_of("restarted");
    let mut notes = vec![format!("restarted {restarted:.2e}")];
    for &mu in &mus {
        let (iters, err) = final_of(&fixed_variant(mu));
        ensure(iters == budget, || format!("mu {mu}: {iters} iterations vs {budget}"))?;
        if mu >= 1e-3 {
            ensure(restarted <= err, || format!("mu {mu}: fixed {err:e} beats restarted {restarted:e}"))?;
        }
        notes.push(format!("mu {mu:e} {err:.2e}"));
    }
    Ok(format!("budget {budget}: {}", notes.join(", ")))
}

fn contour_envelope() -> Outcome {
    let problem = Problem::phantom(64, 0.25, 0);
    let solver = SolverParams::resolve(64, 2.5, 0.25, 1e-9, 14, InnerSpec::Iterations(33)).unwrap();
    let grid: Vec<f64> = (-1..=4).map(|i| 10f64.powi(-i)).collect();
    let rows = contour(&problem, &solver, &grid, &grid).map_err(|e| e.to_string())?;
    ensure(rows.len() == 36, || format!("{} rows", rows.len()))?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let env = 2.0 * r.eta.max(r.zeta);
        worst = worst.max(r.err / env);
        ensure(r.err <= env, || format!("eta {:e} zeta {:e}: err {:e}", r.eta, r.zeta, r.err))?;
    }
    for &zeta in grid.iter().filter(|&&z| z <= 1e-4) {
        let mut line: Vec<(f64, f64)> = rows.iter().filter(|r| r.zeta == zeta).map(|r| (r.eta, r.err)).collect();
        line.sort_by(|p, q| p.0.total_cmp(&q.0));
        for pair in line.windows(2) {
            ensure(pair[1].1 >= pair[0].1, || {
                format!("zeta {zeta:e}: err falls from {:e} to {:e} as eta grows", pair[0].1, pair[1].1)
            })?;
        }
    }
    Ok(format!("36 points, max err / (2 max(eta, zeta)) = {worst:.3}"))
}

fn unrolling_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let side = [4, 8, 16][case % 3];
        let mut idx: Vec<usize> = (1..side * side).filter(|_| rng.random::<f64>() < 0.3).collect();
        idx.insert(0, 0);
        let a = MeasurementOperator::new(SamplingMask::new(side, idx).unwrap()).unwrap();
        let w = AnalysisOperator::new(side, 0.5 + 3.0 * rng.random::<f64>()).unwrap();
        let restarts = rng.random_range(1..4);
        let inner_iters = rng.random_range(0..6);
        let mu: Vec<f64> = (0..restarts).map(|k| 0.5 * 0.25f64.powi(k)).collect();
        let s = RestartSchedule::from_parts(mu, inner_iters).unwrap();
        let y = random_vec(&mut rng, a.m(), 2.0);
        let eta = 0.05 + 0.2 * rng.random::<f64>();
        let init = if case % 2 == 0 { InitialPoint::Zero } else { InitialPoint::PseudoInverse };
        let x0 = init.resolve(&a, &y).unwrap();
        let (direct, _) = restarted_run(&x0, &a, &w, &y, eta, &s).unwrap();
        let (net, trace) = forward_as_network(&y, &a, &w, &s, eta, init).unwrap();
        ensure(net.as_slice() == direct.as_slice(), || format!("case {case}: outputs differ"))?;
        let dims = network_dims(restarts as usize - 1, inner_iters, a.n(), w.m(), a.m()).unwrap();
        ensure(trace.layers.len() + 1 == dims.depth, || format!("case {case}: depth mismatch"))?;
        ensure(dims.max_width <= 3 * a.n() + w.m(), || format!("case {case}: width bound"))?;
    }
    let n = 64 * 64;
    let big = network_dims(9, 17, n, 3 * n, 1000).unwrap();
    ensure(big.depth == 901, || format!("L = {} for K=9, n=17", big.depth))?;
    Ok("50 instances bitwise equal, L = 901 for K=9, n=17".into())
}

fn vjp_finite_differences() -> Outcome {
    let side = 16;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut checked = 0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let a = operator(side, 0.3, seed);
        let w = AnalysisOperator::new(side, 2.5).unwrap();
        let x = render_phantom(side, &head()).unwrap();
        let eta = 0.02;
        let noise = random_vec(&mut rng, a.m(), 1.0);
        let sc = eta / norm(&noise);
        let y: Vec<Complex64> = a.measure(&x).unwrap().iter().zip(&noise).map(|(p, q)| p + q * sc).collect();
        let mu0 = 0.05 * x.norm() / side as f64;
        let s = RestartSchedule::from_parts((0..3).map(|k| mu0 / 4f64.powi(k)).collect(), 5).unwrap();
        let solver = RestartedNesta::new(&a, &w, &s, 0.5 * eta);
        let e = random_vec(&mut rng, a.m(), 0.01);
        let cot = random_vec(&mut rng, a.n(), 1.0);
        let cot_grid = ImageGrid::from_vec(side, cot.clone()).unwrap();
        let grad = vjp_solver(&solver, &y, &e, &cot_grid, DEFAULT_TAPE_BUDGET).map_err(|e| e.to_string())?;
        let gmax = grad.iter().map(|g| g.re.abs().max(g.im.abs())).fold(0.0, f64::max);
        let eval = |e: &[Complex64]| {
            let yp: Vec<Complex64> = y.iter().zip(e).map(|(p, q)| p + q).collect();
            let (tape, _, out) = record_solver(&solver, yp, DEFAULT_TAPE_BUDGET).unwrap();
            (inner(&cot, tape.vector(out)).re, tape.branch_signature())
        };
        let (_, sig0) = eval(&e);
        let h = 1e-6 * y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for _ in 0..20 {
            let j = rng.random_range(0..a.m());
            let imag = rng.random::<bool>();
            let dir = if imag { c(0.0, h) } else { c(h, 0.0) };
            let mut ep = e.clone();
            ep[j] += dir;
            let mut em = e.clone();
            em[j] -= dir;
            let ((fp, sp), (fm, sm)) = (eval(&ep), eval(&em));
            if sp != sig0 || sm != sig0 {
                skipped += 1;
                continue;
            }
            let fd = (fp - fm) / (2.0 * h);
            let g = if imag { grad[j].im } else { grad[j].re };
            worst = worst.max((fd - g).abs() / g.abs().max(1e-3 * gmax));
            checked += 1;
        }
    }
    ensure(checked >= 75, || format!("only {checked} usable stencils"))?;
    ensure(worst < 1e-5, || format!("relative error {worst:e}"))?;
    Ok(format!("{checked} coordinates ({skipped} branch flips skipped), worst {worst:.1e}"))
}

fn stability_smoke() -> Outcome {
    let problem = Problem::phantom(32, 0.25, 0);
    let solver = SolverParams::resolve(32, 2.5, 0.25, 1e-9, 4, InnerSpec::Iterations(17)).unwrap();
    let eta = 1e-2;
    let radii = [eta, 10.0 * eta, 100.0 * eta];
    let search = SearchParams {
        trials: 8,
        steps: 40,
        step_size: 3.0,
        seed: 0,
        tape_budget: DEFAULT_TAPE_BUDGET,
    };
    let out = experiments::stability(&problem, &solver, eta, &radii, &search).map_err(|e| e.to_string())?;
    let mut amps = Vec::new();
    let mut prev_obj = f64::NEG_INFINITY;
    for o in &out {
        let en = norm(&o.search.e_best);
        ensure(en <= o.eta_tilde * (1.0 + 1e-12), || format!("||e|| = {en:e} > {:e}", o.eta_tilde))?;
        let amp = o.amplification();
        ensure(amp <= 10.0, || format!("amplification {amp:.3} at {:e}", o.eta_tilde))?;
        if let Some(&last) = amps.last() {
            ensure(amp <= 2.0 * last, || format!("amplification grows {last:.3} -> {amp:.3}"))?;
        }
        ensure(o.search.best_objective >= prev_obj, || "best objective decreased with radius".into())?;
        prev_obj = o.search.best_objective;
        amps.push(amp);
    }
    let list: Vec<String> = amps.iter().map(|a| format!("{a:.2}")).collect();
    Ok(format!("amplification {}", list.join(", ")))
}

fn determinism() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = |sampling| Problem::phantom(16, sampling, 3);
    let solver = SolverParams::resolve(16, 2.5, 0.25, 1e-9, 3, InnerSpec::Iterations(6)).unwrap();
    let experiments = [
        Experiment::ExpDecay {
            problem: small(0.3),
            solver: solver.clone(),
            etas: vec![1e-1, 1e-3],
        },
        Experiment::Compare {
            problem: small(0.3),
            solver: solver.clone(),
            eta: 1e-3,
            mus: vec![1e-2, 1e-3],
        },
        Experiment::Contour {
            problem: small(0.3),
            solver: solver.clone(),
            etas: vec![1e-1, 1e-3],
            zetas: vec![1e-1, 1e-3],
        },
        Experiment::Stability {
            problem: small(0.3),
            solver: solver.clone(),
            eta: 1e-2,
            eta_tildes: vec![1e-2, 1e-1],
            search: SearchParams {
                trials: 3,
                steps: 3,
                step_size: 3.0,
                seed: 1,
                tape_budget: DEFAULT_TAPE_BUDGET,
            },
        },
    ];
    let mut files = 0;
    for (i, exp) in experiments.iter().enumerate() {
        let first = dir.path().join(format!("run{i}"));
        let manifest = pool.install(|| manifest::run(exp, &first)).map_err(|e| e.to_string())?;
        let second = dir.path().join(format!("replay{i}"));
        let again = pool
            .install(|| manifest::replay(&first.join(manifest::MANIFEST_FILE), &second))
            .map_err(|e| e.to_string())?;
        ensure(again.experiment == manifest.experiment, || "manifest parameters changed".into())?;
        for name in manifest.outputs.iter().filter(|n| n.ends_with(".csv") || n.ends_with(".txt")) {
            let read = |d: &Path| std::fs::read(d.join(name)).unwrap();
            ensure(read(&first) == read(&second), || format!("{name} differs on replay"))?;
            files += 1;
        }
    }
    Ok(format!("4 experiments replayed, {files} files bitwise identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("operator identities", 10, operator_identities),
        ("projection oracle", 5, projection_oracle),
        ("objective error bound", 30, objective_bound),
        ("exponential decay", 120, exponential_decay),
        ("restart vs fixed mu", 120, restart_vs_fixed),
        ("contour envelope", 300, contour_envelope),
        ("unrolling equivalence", 60, unrolling_equivalence),
        ("vjp vs finite differences", 60, vjp_finite_differences),
        ("stability smoke", 600, stability_smoke),
        ("determinism", 120, determinism),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > Duration::from_secs(limit) => Err(format!("{detail}; over the {limit} s limit")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1} s]", took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{:.1} s]", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
