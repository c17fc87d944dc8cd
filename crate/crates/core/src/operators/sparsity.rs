use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Best `s`-term approximation error in `l1`: the sum of the `len - s`
/// smallest magnitudes of `z`.
pub fn best_s_term_error(z: &[Complex64], s: usize) -> Result<f64> {
    if s > z.len() {
        return Err(Error::invalid("s", "must not exceed the vector length"));
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    mags.sort_unstable_by(f64::total_cmp);
    Ok(mags[..z.len() - s].iter().sum())
}
