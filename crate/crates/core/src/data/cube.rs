//! Binary cube container.
//!
//! An ASCII header line `HSCUBE1 <height> <width> <bands>\n` followed by
//! `height·width·bands` little-endian `f32` values, band-major (all pixels
//! of band 0, then band 1, …), pixels in row-major order.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::HyperspectralImage;

pub const MAGIC: &str = "HSCUBE1";
const MAX_HEADER: usize = 128;

/// Cube dimensions as declared in a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeHeader {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
}

impl CubeHeader {
    /// Payload size in bytes, `None` on overflow.
    pub fn payload_len(&self) -> Option<usize> {
        self.height
            .checked_mul(self.width)?
            .checked_mul(self.bands)?
            .checked_mul(4)
    }
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::format("cube", detail)
}

/// Parses the header line, returning it and the payload offset.
pub fn parse_header(bytes: &[u8]) -> Result<(CubeHeader, usize)> {
    let limit = bytes.len().min(MAX_HEADER);
    let end = bytes[..limit]
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| malformed("header line not terminated"))?;
    let line = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed("header is not ASCII"))?;
    let fields: Vec<&str> = line.split(' ').collect();
    let [magic, h, w, b] = fields[..] else {
        return Err(malformed(format!("expected `{MAGIC} <height> <width> <bands>`, got `{line}`")));
    };
    if magic != MAGIC {
        return Err(malformed(format!("bad magic `{magic}`")));
    }
    let dim = |s: &str, what: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(0) => Err(malformed(format!("{what} must be positive"))),
            Ok(v) if s.bytes().all(|c| c.is_ascii_digit()) => Ok(v),
            _ => Err(malformed(format!("bad {what} `{s}`"))),
        }
    };
    let header = CubeHeader {
        height: dim(h, "height")?,
        width: dim(w, "width")?,
        bands: dim(b, "bands")?,
    };
    if header.payload_len().is_none() {
        return Err(malformed("dimensions overflow"));
    }
    Ok((header, end + 1))
}

/// Decodes a cube from memory. Negative samples are clamped to zero with a
/// warning; non-finite samples are rejected.
pub fn decode_cube(bytes: &[u8]) -> Result<HyperspectralImage> {
    let (header, offset) = parse_header(bytes)?;
    let expected = header.payload_len().expect("checked by parse_header");
    let payload = &bytes[offset..];
    if payload.len() < expected {
        return Err(malformed(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(malformed(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut clamped = 0usize;
    let mut values = Vec::with_capacity(expected / 4);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(malformed(format!("non-finite sample {v}")));
        }
        if v < 0.0 {
            clamped += 1;
            values.push(0.0);
        } else {
            values.push(f64::from(v));
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} negative samples to zero");
    }
    let n = header.height * header.width;
    let data = Array2::from_shape_vec((header.bands, n), values).expect("length checked");
    HyperspectralImage::new(header.height, header.width, data)
}

/// Encodes `image` as `f32`. Fails if a value does not fit in `f32`.
pub fn encode_cube(image: &HyperspectralImage) -> Result<Vec<u8>> {
    let header = format!("{MAGIC} {} {} {}\n", image.height(), image.width(), image.bands());
    let mut out = Vec::with_capacity(header.len() + image.data().len() * 4);
    out.extend_from_slice(header.as_bytes());
    for v in image.data().iter() {
        let f = *v as f32;
        if !f.is_finite() {
            return Err(Error::param(format!("value {v} does not fit in f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperspectralImage> {
    decode_cube(&fs::read(path)?)
}

pub fn save_cube(image: &HyperspectralImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_cube(image)?)?;
    Ok(())
}
