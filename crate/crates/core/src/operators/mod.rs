//! Linear operators for subsampled Fourier imaging.
//!
//! - [`MeasurementOperator`]: `A = m^{-1/2} P_Omega F`, with `A A^* = (N/m) I`.
//! - [`haar`]: full-depth orthonormal 2D Haar transform.
//! - [`gradient`]: anisotropic forward differences with periodic boundary.
//! - [`AnalysisOperator`]: `W^* = [Phi^*; sqrt(lambda) grad]`, frame bounds `[1, 1 + 8 lambda]`.
//! - [`generate_mask`]: Bernoulli inverse-square-law plus uniform sampling masks.

mod analysis;
mod fft;
mod fourier;
pub mod gradient;
pub mod haar;
mod mask;
mod sparsity;
pub mod vector;

pub use analysis::AnalysisOperator;
pub use fft::{dft2_adjoint, dft2_forward, Fft2};
pub use fourier::MeasurementOperator;
pub use mask::{centered_frequency, generate_mask, MaskDensityConfig, SamplingMask};
pub use sparsity::best_s_term_error;
