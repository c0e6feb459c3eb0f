//! White Gaussian noise at a target signal-to-noise ratio.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::HyperspectralImage;

/// Noise levels of the robustness protocol, in dB; `∞` means no added noise.
pub const SNR_LADDER_DB: [f64; 7] = [f64::INFINITY, 30.0, 25.0, 20.0, 15.0, 10.0, 8.0];

/// `rows × cols` i.i.d. `N(0, sigma²)` samples, reproducible per seed.
pub fn gaussian_field(rows: usize, cols: usize, sigma: f64, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and nonnegative");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(&mut rng))
}

/// Noise standard deviation giving `snr_db` against the mean squared
/// value of the whole cube. Zero for an infinite SNR.
pub fn sigma_for_snr(image: &HyperspectralImage, snr_db: f64) -> Result<f64> {
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !(snr_db > 0.0 && snr_db.is_finite()) {
        return Err(Error::param(format!("SNR must be positive or infinite, got {snr_db}")));
    }
    let data = image.data();
    if data.is_empty() {
        return Err(Error::Degenerate("empty image".into()));
    }
    let power = data.iter().map(|v| v * v).sum::<f64>() / data.len() as f64;
    Ok((power * 10f64.powf(-snr_db / 10.0)).sqrt())
}

/// Adds zero-mean white Gaussian noise at `snr_db` and clamps negative
/// entries to zero.
pub fn add_gaussian_noise(image: &HyperspectralImage, snr_db: f64, seed: u64) -> Result<HyperspectralImage> {
    let sigma = sigma_for_snr(image, snr_db)?;
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let mut data = image.data() + &gaussian_field(image.bands(), image.pixels(), sigma, seed);
    let mut clamped = 0usize;
    data.mapv_inplace(|v| {
        if v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        }
    });
    if clamped > 0 {
        log::debug!("clamped {clamped} negative entries after noise at {snr_db} dB");
    }
    let noisy = HyperspectralImage::new(image.height(), image.width(), data)?;
    match image.band_ids() {
        Some(ids) => noisy.with_band_ids(ids.to_vec()),
        None => Ok(noisy),
    }
}
