//! Restarted NESTA for analysis-sparse quadratically constrained basis
//! pursuit, specialised to subsampled Fourier imaging with a
//! Haar-plus-gradient analysis operator.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`operators`]: the subsampled DFT, the orthonormal 2D Haar transform, the
//!   periodic gradient, the concatenated analysis operator and Bernoulli
//!   variable-density sampling masks.
//! - [`nesta`]: one NESTA solve (Huber smoothing, `T_mu`, the closed-form
//!   projection onto the data-consistency ball).
//! - [`restart`]: restart schedules and the restarted solver.
//! - [`unrolled`]: the same solver evaluated as a staged feed-forward network,
//!   with depth/width accounting.
//! - [`tape`] and [`stability`]: reverse-mode adjoints through the restarted
//!   solver and the worst-case measurement perturbation search.
//! - [`phantom`]: piecewise-constant ellipse phantoms.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod grid;
mod kernels;
mod math;

pub mod nesta;
pub mod operators;
pub mod phantom;
pub mod restart;
pub mod stability;
pub mod tape;
pub mod unrolled;

pub use error::{Error, Result};
pub use grid::ImageGrid;
pub use num_complex::Complex64;

pub use nesta::{nesta_run, nesta_step, NestaConfig, NestaState};
pub use operators::{AnalysisOperator, MaskDensityConfig, MeasurementOperator, SamplingMask};
pub use restart::{restarted_run, InitialPoint, RestartSchedule, RestartedNesta};
pub use unrolled::{forward_as_network, network_dims, NetworkDims};
