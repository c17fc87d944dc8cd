//! Grayscale image files: PNG (8/16-bit) and PGM (P2/P5) input, 16-bit PNG
//! output.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use nestanet_core::ImageGrid;

use crate::error::{format_err, io_err, Result};

/// Loads a square, power-of-two grayscale image scaled to `[0, 1]`.
pub fn load_grayscale(path: &Path) -> Result<ImageGrid> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let (width, height, values) = if bytes.starts_with(b"\x89PNG") {
        decode_png(path)?
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_pgm(path, &bytes)?
    } else {
        return Err(format_err(path, "not a PNG or PGM file"));
    };
    if width != height {
        return Err(format_err(path, format!("image is {width}x{height}, expected square")));
    }
    if !width.is_power_of_two() {
        return Err(format_err(path, format!("side {width} is not a power of two")));
    }
    Ok(ImageGrid::from_real(width, &values)?)
}

fn decode_png(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| format_err(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| format_err(path, "image too large"))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| format_err(path, e.to_string()))?;
    if frame.color_type != png::ColorType::Grayscale {
        return Err(format_err(path, format!("expected grayscale, found {:?}", frame.color_type)));
    }
    let data = &buf[..frame.buffer_size()];
    let (w, h) = (frame.width as usize, frame.height as usize);
    let values = match frame.bit_depth {
        png::BitDepth::Eight => row_major(data, w, h, frame.line_size, 1, 255.0),
        png::BitDepth::Sixteen => row_major(data, w, h, frame.line_size, 2, 65535.0),
        other => return Err(format_err(path, format!("unsupported bit depth {other:?}"))),
    };
    Ok((w, h, values))
}

fn row_major(data: &[u8], w: usize, h: usize, stride: usize, bytes: usize, max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for row in data.chunks(stride).take(h) {
        for px in row[..w * bytes].chunks(bytes) {
            let v = if bytes == 1 { px[0] as u16 } else { u16::from_be_bytes([px[0], px[1]]) };
            out.push(v as f64 / max);
        }
    }
    out
}

fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let binary = bytes.starts_with(b"P5");
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        *slot = next_token(bytes, &mut pos).ok_or_else(|| format_err(path, "truncated PGM header"))?;
    }
    let [w, h, maxval] = header;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("invalid maxval {maxval}")));
    }
    let max = maxval as f64;
    let count = w * h;
    let values = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = pos + 1;
        let per = if maxval < 256 { 1 } else { 2 };
        let raster = bytes
            .get(start..start + count * per)
            .ok_or_else(|| format_err(path, "truncated PGM raster"))?;
        raster
            .chunks(per)
            .map(|px| if per == 1 { px[0] as f64 } else { u16::from_be_bytes([px[0], px[1]]) as f64 } / max)
            .collect()
    } else {
        (0..count)
            .map(|_| next_token(bytes, &mut pos).map(|v| v as f64 / max))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| format_err(path, "truncated PGM raster"))?
    };
    Ok((w, h, values))
}

/// Next decimal token, skipping whitespace and `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

/// Writes `values / scale`, clamped to `[0, 1]`, as a 16-bit grayscale PNG.
pub fn write_png16(path: &Path, side: usize, values: &[f64], scale: f64) -> Result<()> {
    if values.len() != side * side {
        return Err(format_err(path, "value count does not match side"));
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), side as u32, side as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| format_err(path, e.to_string()))?;
    let data: Vec<u8> = values
        .iter()
        .flat_map(|v| (((v / scale).clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes())
        .collect();
    writer.write_image_data(&data).map_err(|e| format_err(path, e.to_string()))?;
    writer.finish().map_err(|e| format_err(path, e.to_string()))?;
    Ok(())
}

/// Writes the elementwise modulus of `image`, max-normalized. Returns the
/// normalization constant (1 for an all-zero image).
pub fn write_modulus_png(path: &Path, image: &ImageGrid) -> Result<f64> {
    let values: Vec<f64> = image.as_slice().iter().map(|c| c.norm()).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    write_png16(path, image.side(), &values, scale)?;
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_tokens_skip_comments() {
        let text = b"P2\n# comment\n2 2\n# another\n255\n0 255\n51 102\n";
        let (w, h, v) = decode_pgm(Path::new("t.pgm"), text).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(v, vec![0.0, 1.0, 0.2, 0.4]);
    }

    #[test]
    fn binary_pgm_16_bit() {
        let mut bytes = b"P5 2 2 65535\n".to_vec();
        for v in [0u16, 65535, 1, 2] {
            bytes.extend(v.to_be_bytes());
        }
        let (_, _, v) = decode_pgm(Path::new("t.pgm"), &bytes).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 1.0 / 65535.0, 2.0 / 65535.0]);
    }
}
