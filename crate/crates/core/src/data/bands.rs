//! Band removal and the water-absorption presets of two common scenes.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::types::HyperspectralImage;

/// Bands dropped from the 210-band Urban cube (1-based, inclusive).
pub const URBAN_REMOVED: &[RangeInclusive<usize>] = &[1..=4, 76..=76, 87..=87, 101..=111, 136..=153, 198..=210];
/// Bands dropped from the 224-band Jasper Ridge cube (1-based, inclusive).
pub const JASPER_REMOVED: &[RangeInclusive<usize>] = &[1..=3, 108..=112, 154..=166, 220..=224];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandPreset {
    Urban,
    Jasper,
}

impl BandPreset {
    /// Sorted 1-based band indices removed by this preset.
    pub fn removed_bands(self) -> Vec<usize> {
        let ranges = match self {
            BandPreset::Urban => URBAN_REMOVED,
            BandPreset::Jasper => JASPER_REMOVED,
        };
        ranges.iter().flat_map(|r| r.clone()).collect()
    }

    /// Band count of the raw cube the preset applies to.
    pub fn raw_bands(self) -> usize {
        match self {
            BandPreset::Urban => 210,
            BandPreset::Jasper => 224,
        }
    }
}

impl std::str::FromStr for BandPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "urban" => Ok(BandPreset::Urban),
            "jasper" => Ok(BandPreset::Jasper),
            other => Err(Error::param(format!("unknown band preset `{other}`"))),
        }
    }
}

/// Drops the listed bands, given as 1-based positions in `image`. The
/// result's band ids keep the original numbering.
pub fn remove_bands(image: &HyperspectralImage, bands: &[usize]) -> Result<HyperspectralImage> {
    let l = image.bands();
    if let Some(bad) = bands.iter().find(|&&b| b == 0 || b > l) {
        return Err(Error::param(format!("band {bad} outside 1..={l}")));
    }
    let mut drop = vec![false; l];
    for &b in bands {
        drop[b - 1] = true;
    }
    let keep: Vec<usize> = (0..l).filter(|&i| !drop[i]).collect();
    if keep.is_empty() {
        return Err(Error::param("every band removed"));
    }
    let ids: Vec<usize> = match image.band_ids() {
        Some(ids) => keep.iter().map(|&i| ids[i]).collect(),
        None => keep.iter().map(|&i| i + 1).collect(),
    };
    let data = image.data().select(ndarray::Axis(0), &keep);
    HyperspectralImage::new(image.height(), image.width(), data)?.with_band_ids(ids)
}
