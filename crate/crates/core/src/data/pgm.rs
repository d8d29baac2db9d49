//! Binary portable graymap (P5) and pixmap (P6) frames.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Decoded frame, intensities normalised by the file's max value and
/// averaged over colour channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major values in `[0, 1]`.
    pub pixels: Vec<f64>,
}

fn ingest(path: &Path, msg: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

pub fn read_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| ingest(path, e.to_string()))?;
    decode(&bytes).map_err(|msg| ingest(path, msg))
}

fn decode(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err("not a binary PGM/PPM file".into()),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number().ok_or("missing width")?;
    let height = h.number().ok_or("missing height")?;
    let maxval = h.number().ok_or("missing max value")?;
    if width == 0 || height == 0 {
        return Err(format!("empty frame {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid max value {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(h.pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err("malformed header".into());
    }
    let raster = &bytes[h.pos + 1..];
    let bps = if maxval > 255 { 2 } else { 1 };
    let need = width * height * channels * bps;
    if raster.len() < need {
        return Err(format!("truncated raster: {} of {need} bytes", raster.len()));
    }
    let sample = |i: usize| -> f64 {
        let v = if bps == 1 {
            raster[i] as usize
        } else {
            ((raster[2 * i] as usize) << 8) | raster[2 * i + 1] as usize
        };
        v.min(maxval) as f64
    };
    let pixels = (0..width * height)
        .map(|p| {
            let sum: f64 = (0..channels).map(|c| sample(p * channels + c)).sum();
            sum / channels as f64 / maxval as f64
        })
        .collect();
    Ok(Frame {
        width,
        height,
        pixels,
    })
}

/// Writes an 8-bit P5 graymap.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Dimension(format!(
            "{} pixels for a {width}x{height} frame",
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    fs::write(path, out)?;
    Ok(())
}
