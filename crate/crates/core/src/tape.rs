//! Reverse-mode differentiation of the restarted solver.
//!
//! A [`Tape`] records every primitive of a forward solve together with its
//! output value. Each primitive has a vector-Jacobian rule; complex vectors
//! are treated as real vectors of twice the length with the inner product
//! `Re <a, b>`. Kinks follow fixed conventions: `T_mu` at `|w| = mu` uses the
//! quadratic branch, and the noise multiplier has derivative 0 where it is
//! clamped to 0.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::kernels;
use crate::operators::vector::norm_sqr;
use crate::operators::{AnalysisOperator, MeasurementOperator};
use crate::restart::{InitialPoint, RestartedNesta};

/// Index of a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot(usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Vector(Vec<Complex64>),
    Scalar(f64),
}

impl Value {
    pub fn as_vector(&self) -> &[Complex64] {
        match self {
            Value::Vector(v) => v,
            Value::Scalar(_) => panic!("slot holds a scalar"),
        }
    }

    pub fn as_scalar(&self) -> f64 {
        match self {
            Value::Scalar(s) => *s,
            Value::Vector(_) => panic!("slot holds a vector"),
        }
    }

    fn bytes(&self) -> usize {
        match self {
            Value::Vector(v) => v.len() * core::mem::size_of::<Complex64>(),
            Value::Scalar(_) => core::mem::size_of::<f64>(),
        }
    }
}

/// A recorded primitive and the slots it reads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    /// Differentiable input.
    Input,
    /// Value with no gradient.
    Constant,
    /// `W^* x`.
    Analysis { x: Slot },
    /// `W c`.
    Synthesis { c: Slot },
    /// Entrywise `T_mu`.
    HuberGradient { w: Slot, mu: f64 },
    /// `A x`.
    Measure { x: Slot },
    /// `nu^{-1} A^* r`.
    PseudoInverse { r: Slot },
    /// `y - A q`.
    Residual { y: Slot, q: Slot },
    /// `base - coef * dir`.
    Descend { base: Slot, coef: f64, dir: Slot },
    /// `sum |r_i|^2`.
    SquaredNorm { r: Slot },
    /// `max(0, sqrt(s) / eta - 1)`.
    Multiplier { s: Slot, eta: f64 },
    /// `u / (u + 1)`.
    Gate { u: Slot },
    /// `base + g * dir` with scalar `g`.
    GatedUpdate { base: Slot, g: Slot, dir: Slot },
    /// `tau v + (1 - tau) x`.
    Convex { tau: f64, v: Slot, x: Slot },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    op: Op,
    value: Value,
}

/// Recorded forward computation bound to one pair of operators.
#[derive(Debug, Clone)]
pub struct Tape<'a> {
    measurement: &'a MeasurementOperator,
    analysis: &'a AnalysisOperator,
    nodes: Vec<Node>,
}

impl PartialEq for Tape<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl<'a> Tape<'a> {
    pub fn new(measurement: &'a MeasurementOperator, analysis: &'a AnalysisOperator) -> Self {
        Self {
            measurement,
            analysis,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn op(&self, slot: Slot) -> Op {
        self.nodes[slot.0].op
    }

    pub fn value(&self, slot: Slot) -> &Value {
        &self.nodes[slot.0].value
    }

    pub fn vector(&self, slot: Slot) -> &[Complex64] {
        self.value(slot).as_vector()
    }

    pub fn scalar(&self, slot: Slot) -> f64 {
        self.value(slot).as_scalar()
    }

    /// Bytes held by recorded values.
    pub fn value_bytes(&self) -> usize {
        self.nodes.iter().map(|n| n.value.bytes()).sum()
    }

    pub fn input(&mut self, v: Vec<Complex64>) -> Slot {
        self.push(Op::Input, Value::Vector(v))
    }

    pub fn constant(&mut self, v: Vec<Complex64>) -> Slot {
        self.push(Op::Constant, Value::Vector(v))
    }

    /// Appends `op`, evaluating it on the recorded values.
    pub fn record(&mut self, op: Op) -> Slot {
        let value = self.eval(op);
        self.push(op, value)
    }

    fn push(&mut self, op: Op, value: Value) -> Slot {
        self.nodes.push(Node { op, value });
        Slot(self.nodes.len() - 1)
    }

    fn eval(&self, op: Op) -> Value {
        let v = |s: Slot| self.vector(s);
        let s = |s: Slot| self.scalar(s);
        match op {
            Op::Input | Op::Constant => panic!("leaf values are supplied, not evaluated"),
            Op::Analysis { x } => Value::Vector(self.analysis.analysis_slice(v(x))),
            Op::Synthesis { c } => Value::Vector(self.analysis.synthesis_slice(v(c))),
            Op::HuberGradient { w, mu } => {
                let mut out = v(w).to_vec();
                kernels::huber_gradient_in_place(&mut out, mu);
                Value::Vector(out)
            }
            Op::Measure { x } => Value::Vector(self.measurement.measure_slice(v(x))),
            Op::PseudoInverse { r } => Value::Vector(self.measurement.pseudo_inverse_slice(v(r))),
            Op::Residual { y, q } => Value::Vector(kernels::residual(self.measurement, v(y), v(q))),
            Op::Descend { base, coef, dir } => Value::Vector(kernels::descend(v(base), coef, v(dir))),
            Op::SquaredNorm { r } => Value::Scalar(norm_sqr(v(r))),
            Op::Multiplier { s: sq, eta } => Value::Scalar(kernels::multiplier(s(sq), eta)),
            Op::Gate { u } => Value::Scalar(kernels::gate(s(u))),
            Op::GatedUpdate { base, g, dir } => Value::Vector(kernels::gated_update(v(base), s(g), v(dir))),
            Op::Convex { tau, v: a, x } => Value::Vector(kernels::convex_step(tau, v(a), v(x))),
        }
    }

    /// Re-evaluates every non-leaf node from the recorded leaves.
    pub fn replay(&self) -> Tape<'a> {
        let mut out = Tape::new(self.measurement, self.analysis);
        for node in &self.nodes {
            match node.op {
                Op::Input | Op::Constant => {
                    out.push(node.op, node.value.clone());
                }
                op => {
                    out.record(op);
                }
            }
        }
        out
    }

    /// Which branch every kink-bearing primitive took: one entry per
    /// `T_mu` coordinate (quadratic branch or not) and per multiplier
    /// (clamped or not).
    pub fn branch_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            match node.op {
                Op::HuberGradient { w, mu } => sig.extend(self.vector(w).iter().map(|c| c.norm() <= mu)),
                Op::Multiplier { .. } => sig.push(node.value.as_scalar() > 0.0),
                _ => {}
            }
        }
        sig
    }

    /// Gradient of `Re <cotangent, output>` with respect to every slot.
    pub fn backward(&self, output: Slot, cotangent: &[Complex64]) -> Result<Adjoints> {
        check_len(self.vector(output).len(), cotangent.len())?;
        let mut adj: Vec<Option<Value>> = vec![None; self.nodes.len()];
        adj[output.0] = Some(Value::Vector(cotangent.to_vec()));
        for i in (0..=output.0).rev() {
            let Some(bar) = adj[i].take() else { continue };
            self.pull_back(i, &bar, &mut adj);
            adj[i] = Some(bar);
        }
        Ok(Adjoints { values: adj })
    }

    fn pull_back(&self, i: usize, bar: &Value, adj: &mut [Option<Value>]) {
        let node = &self.nodes[i];
        let a = self.measurement;
        let w_op = self.analysis;
        match node.op {
            Op::Input | Op::Constant => {}
            Op::Analysis { x } => acc_vec(adj, x, w_op.synthesis_slice(bar.as_vector()), 1.0),
            Op::Synthesis { c } => acc_vec(adj, c, w_op.analysis_slice(bar.as_vector()), 1.0),
            Op::HuberGradient { w, mu } => {
                let grad = self
                    .vector(w)
                    .iter()
                    .zip(bar.as_vector())
                    .map(|(&wi, &ti)| {
                        let mag = wi.norm();
                        if mag <= mu {
                            ti / mu
                        } else {
                            let u = wi / mag;
                            (ti - u * (u.conj() * ti).re) / mag
                        }
                    })
                    .collect();
                acc_vec(adj, w, grad, 1.0);
            }
            Op::Measure { x } => acc_vec(adj, x, a.adjoint_slice(bar.as_vector()), 1.0),
            Op::PseudoInverse { r } => {
                let mut g = a.measure_slice(bar.as_vector());
                let inv_nu = 1.0 / a.nu();
                g.iter_mut().for_each(|v| *v *= inv_nu);
                acc_vec(adj, r, g, 1.0);
            }
            Op::Residual { y, q } => {
                acc_vec(adj, y, bar.as_vector().to_vec(), 1.0);
                acc_vec(adj, q, a.adjoint_slice(bar.as_vector()), -1.0);
            }
            Op::Descend { base, coef, dir } => {
                acc_vec(adj, base, bar.as_vector().to_vec(), 1.0);
                acc_vec(adj, dir, bar.as_vector().to_vec(), -coef);
            }
            Op::SquaredNorm { r } => {
                let sbar = bar.as_scalar();
                acc_vec(adj, r, self.vector(r).to_vec(), 2.0 * sbar);
            }
            Op::Multiplier { s, eta } => {
                let lambda = node.value.as_scalar();
                let sq = self.scalar(s);
                if lambda > 0.0 && sq > 0.0 {
                    acc_scalar(adj, s, bar.as_scalar() / (2.0 * eta * crate::math::sqrt(sq)));
                }
            }
            Op::Gate { u } => {
                let l = self.scalar(u);
                acc_scalar(adj, u, bar.as_scalar() / ((l + 1.0) * (l + 1.0)));
            }
            Op::GatedUpdate { base, g, dir } => {
                let obar = bar.as_vector();
                let gbar: f64 = self.vector(dir).iter().zip(obar).map(|(d, o)| (d.conj() * o).re).sum();
                acc_vec(adj, base, obar.to_vec(), 1.0);
                acc_vec(adj, dir, obar.to_vec(), self.scalar(g));
                acc_scalar(adj, g, gbar);
            }
            Op::Convex { tau, v, x } => {
                acc_vec(adj, v, bar.as_vector().to_vec(), tau);
                acc_vec(adj, x, bar.as_vector().to_vec(), 1.0 - tau);
            }
        }
    }
}

fn acc_vec(adj: &mut [Option<Value>], slot: Slot, mut g: Vec<Complex64>, scale: f64) {
    if scale != 1.0 {
        g.iter_mut().for_each(|v| *v *= scale);
    }
    match &mut adj[slot.0] {
        Some(Value::Vector(existing)) => existing.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
        entry => *entry = Some(Value::Vector(g)),
    }
}

fn acc_scalar(adj: &mut [Option<Value>], slot: Slot, g: f64) {
    match &mut adj[slot.0] {
        Some(Value::Scalar(existing)) => *existing += g,
        entry => *entry = Some(Value::Scalar(g)),
    }
}

/// Result of [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Adjoints {
    values: Vec<Option<Value>>,
}

impl Adjoints {
    /// Adjoint of a vector slot, zero if no gradient reached it.
    pub fn vector(&self, slot: Slot, len: usize) -> Vec<Complex64> {
        match &self.values[slot.0] {
            Some(Value::Vector(v)) => v.clone(),
            _ => vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn scalar(&self, slot: Slot) -> f64 {
        match &self.values[slot.0] {
            Some(Value::Scalar(s)) => *s,
            _ => 0.0,
        }
    }
}

/// Upper estimate in bytes of recording and differentiating `solver`:
/// recorded values plus adjoint buffers of the same size.
pub fn estimate_tape_bytes(solver: &RestartedNesta<'_>) -> u64 {
    let (n, mm, m) = (
        solver.measurement.n() as u64,
        solver.analysis.m() as u64,
        solver.measurement.m() as u64,
    );
    let per_iter = (2 * mm + 8 * n + 2 * m) * 16 + 6 * 8;
    let iters = solver.schedule.total_iterations() as u64;
    2 * (iters.saturating_mul(per_iter) + (3 * n + m) * 16)
}

/// Records `solver` applied to `y_in`, returning the tape, the input slot
/// and the output slot. Values match [`RestartedNesta::reconstruct`] bit
/// for bit.
pub fn record_solver<'a>(
    solver: &RestartedNesta<'a>,
    y_in: Vec<Complex64>,
    budget: u64,
) -> Result<(Tape<'a>, Slot, Slot)> {
    solver.check(&y_in)?;
    let required = estimate_tape_bytes(solver);
    if required > budget {
        return Err(Error::TapeBudgetExceeded { required, budget });
    }
    let mut tape = Tape::new(solver.measurement, solver.analysis);
    let y = tape.input(y_in);
    let x0 = match solver.init {
        InitialPoint::Zero => tape.constant(vec![Complex64::new(0.0, 0.0); solver.measurement.n()]),
        InitialPoint::PseudoInverse => tape.record(Op::PseudoInverse { r: y }),
    };
    let beta = solver.analysis.beta();
    let eta = solver.eta;
    let inner = solver.schedule.inner_iters();
    let mut x = x0;
    for &mu in solver.schedule.mu() {
        let step = mu / beta;
        let (mut qv, mut z) = (x, x);
        for it in 0..=inner {
            let w = tape.record(Op::Analysis { x: z });
            let t = tape.record(Op::HuberGradient { w, mu });
            let g = tape.record(Op::Synthesis { c: t });
            let qv_next = tape.record(Op::Descend {
                base: qv,
                coef: step * kernels::alpha(it),
                dir: g,
            });
            let qx = tape.record(Op::Descend { base: z, coef: step, dir: g });
            let x_next = record_projection(&mut tape, qx, y, eta);
            let v = record_projection(&mut tape, qv_next, y, eta);
            z = tape.record(Op::Convex {
                tau: kernels::tau(it),
                v,
                x: x_next,
            });
            qv = qv_next;
            x = x_next;
        }
    }
    Ok((tape, y, x))
}

fn record_projection(tape: &mut Tape<'_>, q: Slot, y: Slot, eta: f64) -> Slot {
    let r = tape.record(Op::Residual { y, q });
    let s = tape.record(Op::SquaredNorm { r });
    let lambda = tape.record(Op::Multiplier { s, eta });
    let g = tape.record(Op::Gate { u: lambda });
    let p = tape.record(Op::PseudoInverse { r });
    tape.record(Op::GatedUpdate { base: q, g, dir: p })
}
