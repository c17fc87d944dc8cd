//! Restarted NESTA evaluated as a feed-forward network.
//!
//! Each NESTA iteration is five layers. Every layer is an affine map whose
//! bias depends on `y` only, followed by one of four activations:
//!
//! | layer | width        | contents after the affine map          | activation            |
//! |-------|--------------|----------------------------------------|-----------------------|
//! | 1     | `2N + M`     | `q_v`, `z`, `W^* z`                    | Huber gradient on `W^* z` |
//! | 2     | `2(N + m)`   | `q_v`, `q_x`, `y - A q_v`, `y - A q_x` | squared modulus on residuals |
//! | 3     | `2(N + 1)`   | `q_v`, `q_x`, `s_v`, `s_x`             | `max(0, sqrt(s)/eta - 1)` |
//! | 4     | `3N + 2`     | `lambda_x`, `p_x`, `q_x`, `lambda_v`, `q_v` | gate `rho(lambda_x)` on `p_x` |
//! | 5     | `3N + 1`     | `lambda_v`, `p_v`, `x`, `q_v`          | gate `rho(lambda_v)` on `p_v` |
//!
//! with `p = nu^{-1} A^*(y - A q)` and `rho(u) = u / (u + 1)`. The affine map
//! after layer 5 emits `(q_v, tau v + (1 - tau) x)`, or `(x, x)` at the end of
//! a restart. Layers are applied as fast transforms, never as matrices, and
//! through the same kernels as [`crate::restart::restarted_run`], so the
//! output is bitwise identical.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::ImageGrid;
use crate::kernels;
use crate::operators::{AnalysisOperator, MeasurementOperator};
use crate::restart::{InitialPoint, RestartSchedule, RestartedNesta};

/// The four activation functions used by the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activation {
    /// Entrywise `T_mu`.
    HuberGradient,
    /// Entrywise `|u|^2`.
    Square,
    /// Scalar `max(0, sqrt(u) / eta - 1)`.
    NoiseMultiplier,
    /// Rescaling of a vector by `rho(u) = u / (u + 1)` of a scalar entry.
    Gate,
}

/// Position of a hidden layer inside its iteration block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerRole {
    Smoothing,
    Residual,
    Norm,
    ProjectX,
    ProjectV,
}

impl LayerRole {
    pub const BLOCK: [LayerRole; 5] = [
        LayerRole::Smoothing,
        LayerRole::Residual,
        LayerRole::Norm,
        LayerRole::ProjectX,
        LayerRole::ProjectV,
    ];

    pub fn activation(self) -> Activation {
        match self {
            LayerRole::Smoothing => Activation::HuberGradient,
            LayerRole::Residual => Activation::Square,
            LayerRole::Norm => Activation::NoiseMultiplier,
            LayerRole::ProjectX | LayerRole::ProjectV => Activation::Gate,
        }
    }

    /// Width of this layer for signal length `n`, `m` measurements and `mm`
    /// analysis coefficients.
    pub fn width(self, n: usize, mm: usize, m: usize) -> usize {
        match self {
            LayerRole::Smoothing => 2 * n + mm,
            LayerRole::Residual => 2 * (n + m),
            LayerRole::Norm => 2 * (n + 1),
            LayerRole::ProjectX => 3 * n + 2,
            LayerRole::ProjectV => 3 * n + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkDims {
    /// Number of affine maps `L`.
    pub depth: usize,
    /// `L + 1` widths, input `m` first and output `N` last.
    pub layer_widths: Vec<usize>,
    pub max_width: usize,
    pub activation_kinds: usize,
}

/// Depth and widths of the network for `restarts` restarts of `inner + 1`
/// iterations each, signal length `n`, `mm` analysis coefficients and `m`
/// measurements.
pub fn network_dims(restarts: usize, inner: usize, n: usize, mm: usize, m: usize) -> Result<NetworkDims> {
    if n == 0 || mm == 0 || m == 0 {
        return Err(Error::invalid("dims", "N, M and m must be positive"));
    }
    if mm < n {
        return Err(Error::invalid("dims", "need M >= N"));
    }
    if m > n {
        return Err(Error::invalid("dims", "need m <= N"));
    }
    let blocks = (restarts + 1)
        .checked_mul(inner + 1)
        .ok_or(Error::invalid("dims", "block count overflows"))?;
    let mut layer_widths = Vec::with_capacity(5 * blocks + 2);
    layer_widths.push(m);
    for _ in 0..blocks {
        layer_widths.extend(LayerRole::BLOCK.iter().map(|r| r.width(n, mm, m)));
    }
    layer_widths.push(n);
    let max_width = layer_widths.iter().copied().max().unwrap_or(0);
    Ok(NetworkDims {
        depth: layer_widths.len() - 1,
        layer_widths,
        max_width,
        activation_kinds: 4,
    })
}

/// One hidden layer as it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerRecord {
    pub block: usize,
    pub role: LayerRole,
    pub width: usize,
    pub activation: Activation,
}

/// Intermediate values of one iteration block (restart `restart`, 1-based,
/// inner iteration `iter`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub restart: usize,
    pub iter: usize,
    /// `(q_v, q_x)` after the gradient step.
    pub step: (Vec<Complex64>, Vec<Complex64>),
    /// Multipliers `(lambda_v, lambda_x)`.
    pub multipliers: (f64, f64),
    /// Block output `(q_v, z)`; `(x, x)` at the end of a restart.
    pub output: (Vec<Complex64>, Vec<Complex64>),
}

impl BlockTrace {
    /// The four vectors of the intermediate stage `(q_v, q_x, lambda_v,
    /// lambda_x)`.
    pub fn projection_inputs(&self) -> (&[Complex64], &[Complex64], f64, f64) {
        (&self.step.0, &self.step.1, self.multipliers.0, self.multipliers.1)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerTrace {
    pub layers: Vec<LayerRecord>,
    pub blocks: Vec<BlockTrace>,
}

impl LayerTrace {
    /// Distinct activations used over the whole trace.
    pub fn activation_census(&self) -> Vec<Activation> {
        let mut kinds: Vec<Activation> = self.layers.iter().map(|l| l.activation).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

/// Runs restarted NESTA layer by layer, recording the trace. The output
/// equals [`RestartedNesta::reconstruct`] bit for bit.
pub fn forward_as_network(
    y: &[Complex64],
    measurement: &MeasurementOperator,
    analysis: &AnalysisOperator,
    schedule: &RestartSchedule,
    eta: f64,
    init: InitialPoint,
) -> Result<(ImageGrid, LayerTrace)> {
    let solver = RestartedNesta::new(measurement, analysis, schedule, eta).with_init(init);
    solver.check(y)?;
    let side = measurement.side();
    let (n, mm, m) = (measurement.n(), analysis.m(), measurement.m());
    let beta = analysis.beta();
    let inner = schedule.inner_iters();

    // Input layer: y -> (z_0, z_0).
    let z0 = init.resolve(measurement, y)?.into_vec();
    check_len(n, z0.len())?;
    let mut qv = z0.clone();
    let mut z = z0;
    let mut x = Vec::new();

    let mut trace = LayerTrace::default();
    for (k, &mu) in schedule.mu().iter().enumerate() {
        let step = mu / beta;
        for it in 0..=inner {
            let block = trace.blocks.len();
            let mut record = |role: LayerRole| {
                trace.layers.push(LayerRecord {
                    block,
                    role,
                    width: role.width(n, mm, m),
                    activation: role.activation(),
                });
            };

            // Layer 1: (q_v, z) -> (q_v, z, W^* z), then T_mu.
            record(LayerRole::Smoothing);
            let mut w = analysis.analysis_slice(&z);
            kernels::huber_gradient_in_place(&mut w, mu);

            // Layer 2: gradient steps and residuals, then |.|^2.
            record(LayerRole::Residual);
            let grad = analysis.synthesis_slice(&w);
            let qv_next = kernels::descend(&qv, step * kernels::alpha(it), &grad);
            let qx = kernels::descend(&z, step, &grad);
            let sq_v = kernels::squared_moduli(&kernels::residual(measurement, y, &qv_next));
            let sq_x = kernels::squared_moduli(&kernels::residual(measurement, y, &qx));

            // Layer 3: sums, then the noise multiplier.
            record(LayerRole::Norm);
            let lambda_v = kernels::multiplier(kernels::sum(&sq_v), eta);
            let lambda_x = kernels::multiplier(kernels::sum(&sq_x), eta);

            // Layer 4: (lambda_x, p_x, q_x, lambda_v, q_v), gate on p_x.
            record(LayerRole::ProjectX);
            let p_x = measurement.pseudo_inverse_slice(&kernels::residual(measurement, y, &qx));
            let gated_x = kernels::rescale(kernels::gate(lambda_x), &p_x);

            // Layer 5: (lambda_v, p_v, x, q_v), gate on p_v.
            record(LayerRole::ProjectV);
            let x_next = kernels::add(&qx, &gated_x);
            let p_v = measurement.pseudo_inverse_slice(&kernels::residual(measurement, y, &qv_next));
            let gated_v = kernels::rescale(kernels::gate(lambda_v), &p_v);

            // Output map.
            let v = kernels::add(&qv_next, &gated_v);
            let last = it == inner;
            let (out_q, out_z) = if last {
                (x_next.clone(), x_next.clone())
            } else {
                (qv_next.clone(), kernels::convex_step(kernels::tau(it), &v, &x_next))
            };
            trace.blocks.push(BlockTrace {
                restart: k + 1,
                iter: it,
                step: (qv_next, qx),
                multipliers: (lambda_v, lambda_x),
                output: (out_q.clone(), out_z.clone()),
            });
            qv = out_q;
            z = out_z;
            x = x_next;
        }
    }
    Ok((ImageGrid::from_vec(side, x)?, trace))
}
