//! Text mask files: a header line
//! `# nestanet-mask side=<n> m=<m> seed=<seed>` followed by one flat
//! frequency index per line in ascending order.

use std::fs;
use std::path::Path;

use nestanet_core::SamplingMask;
use sha2::{Digest, Sha256};

use crate::error::{format_err, io_err, Result};

const TAG: &str = "# nestanet-mask";

pub fn format_mask(mask: &SamplingMask, seed: u64) -> String {
    let mut out = format!("{TAG} side={} m={} seed={seed}\n", mask.side(), mask.m());
    for i in mask.indices() {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    out
}

pub fn write_mask(path: &Path, mask: &SamplingMask, seed: u64) -> Result<()> {
    fs::write(path, format_mask(mask, seed)).map_err(io_err(path))
}

/// Reads a mask file, returning the mask and the seed from its header.
pub fn read_mask(path: &Path) -> Result<(SamplingMask, u64)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format_err(path, "empty mask file"))?;
    let fields = header
        .strip_prefix(TAG)
        .ok_or_else(|| format_err(path, "missing mask header"))?;
    let (mut side, mut m, mut seed) = (None, None, None);
    for field in fields.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("bad header field {field:?}")))?;
        let parsed: u64 = value
            .parse()
            .map_err(|_| format_err(path, format!("bad header value {field:?}")))?;
        match key {
            "side" => side = Some(parsed as usize),
            "m" => m = Some(parsed as usize),
            "seed" => seed = Some(parsed),
            _ => return Err(format_err(path, format!("unknown header field {key:?}"))),
        }
    }
    let (Some(side), Some(m), Some(seed)) = (side, m, seed) else {
        return Err(format_err(path, "header needs side, m and seed"));
    };
    let indices = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().map_err(|_| format_err(path, format!("bad index {l:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if indices.len() != m {
        return Err(format_err(path, format!("header says m={m}, found {} indices", indices.len())));
    }
    let mask = SamplingMask::new(side, indices).map_err(|e| format_err(path, e.to_string()))?;
    Ok((mask, seed))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
