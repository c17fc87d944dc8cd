//! CSV outputs. Floats are written in shortest round-trip form.

use std::path::Path;

use crate::error::{io_err, Result};

pub const EXP_DECAY_HEADER: [&str; 3] = ["eta", "k", "rel_err"];
pub const COMPARE_HEADER: [&str; 3] = ["variant", "total_iter", "rel_err"];
pub const CONTOUR_HEADER: [&str; 3] = ["eta", "zeta", "err"];
pub const STABILITY_HEADER: [&str; 3] = ["eta_tilde", "trial", "best_objective"];

pub fn float(v: f64) -> String {
    format!("{v:e}")
}

/// Writes a header and rows of preformatted fields.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1e-5, 123.456, 1.0 / 3.0, 5e-324, 0.0] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(0.001), "1e-3");
    }
}
