//! Abundance maps as binary portable pixmaps.
//!
//! Pseudocolor rendering mixes inks: endmembers 1–4 deposit Red, Blue,
//! Green and Black ink in proportion to their abundance. On a white page
//! the channels are
//!
//! ```text
//! R = 255·(1 − clamp(a2 + a3 + a4))
//! G = 255·(1 − clamp(a1 + a2 + a4))
//! B = 255·(1 − clamp(a1 + a3 + a4))
//! ```
//!
//! with flooring, so a pure endmember-1 pixel is red and a 50/50 mix of
//! endmembers 1 and 2 is purple.

use std::fs;
use std::path::Path;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::types::AbundanceMatrix;

fn unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn level(v: f64) -> u8 {
    (255.0 * unit(v)).floor() as u8
}

fn check_grid(n: usize, height: usize, width: usize) -> Result<()> {
    if height * width != n {
        return Err(Error::shape(format!(
            "{n} pixels do not fill a {height}x{width} grid"
        )));
    }
    Ok(())
}

/// RGB triple for one abundance column (up to four entries).
pub fn ink_color(column: ArrayView1<'_, f64>) -> [u8; 3] {
    let mut a = [0.0; 4];
    for (slot, v) in a.iter_mut().zip(column.iter()) {
        *slot = unit(*v);
    }
    let sum: f64 = a.iter().sum();
    if sum > 1.0 {
        a.iter_mut().for_each(|v| *v /= sum);
    }
    let [a1, a2, a3, a4] = a;
    [
        level(1.0 - unit(a2 + a3 + a4)),
        level(1.0 - unit(a1 + a2 + a4)),
        level(1.0 - unit(a1 + a3 + a4)),
    ]
}

/// Encodes `A` (at most four endmembers) as a binary `P6` image.
pub fn pseudocolor_ppm(a: &AbundanceMatrix, height: usize, width: usize) -> Result<Vec<u8>> {
    if a.count() > 4 {
        return Err(Error::param(format!(
            "pseudocolor supports at most 4 endmembers, got {}",
            a.count()
        )));
    }
    check_grid(a.pixels(), height, width)?;
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for col in a.data().columns() {
        out.extend_from_slice(&ink_color(col));
    }
    Ok(out)
}

/// Encodes one abundance map as a binary `P5` image, `255·z` floored.
pub fn grayscale_pgm(z: ArrayView1<'_, f64>, height: usize, width: usize) -> Result<Vec<u8>> {
    check_grid(z.len(), height, width)?;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(z.iter().map(|v| level(*v)));
    Ok(out)
}

pub fn render_pseudocolor(a: &AbundanceMatrix, height: usize, width: usize, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, pseudocolor_ppm(a, height, width)?)?;
    Ok(())
}

pub fn render_grayscale(
    z: ArrayView1<'_, f64>,
    height: usize,
    width: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, grayscale_pgm(z, height, width)?)?;
    Ok(())
}
