//! Data-driven starting values for the lasso weight `α` and graph weight `λ`,
//! and the search grids around them.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::HyperspectralImage;

/// Points in each search grid.
pub const GRID_POINTS: usize = 50;
/// Number of random patches averaged by [`estimate_lambda0`].
pub const LAMBDA_PATCHES: usize = 100;
/// Side of each sampled patch.
pub const PATCH_SIDE: usize = 5;
/// Exponents `e` of the doubling factors `2^e` used when sweeping both
/// regularization weights around a baseline.
pub const DOUBLING_EXPONENTS: [i32; 9] = [-4, -3, -2, -1, 0, 1, 2, 3, 4];

const ZERO_SUBSTITUTE: f64 = 1e-6;

/// Starting estimates and the grids searched around them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub alpha0: f64,
    pub lambda0: f64,
    pub alpha_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
}

/// Mean Hoyer sparseness of the band images, scaled by `√L`:
/// `α₀ = (1/√L) Σ_l (√N − ‖x_l‖₁/‖x_l‖₂) / (√N − 1)`.
///
/// All-zero bands are skipped and do not count towards `L`.
pub fn estimate_alpha0(y: &HyperspectralImage) -> Result<f64> {
    let n = y.pixels();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "sparseness needs at least 2 pixels, image has {n}"
        )));
    }
    let sqrt_n = (n as f64).sqrt();
    let mut used = 0usize;
    let mut total = 0.0;
    for band in y.data().rows() {
        let l2 = band.dot(&band).sqrt();
        if l2 == 0.0 {
            continue;
        }
        let l1 = band.sum();
        total += (sqrt_n - l1 / l2) / (sqrt_n - 1.0);
        used += 1;
    }
    if used < y.bands() {
        log::warn!("{} all-zero bands skipped in alpha estimate", y.bands() - used);
    }
    if used == 0 {
        return Err(Error::Degenerate("every band is zero".into()));
    }
    Ok(total / (used as f64).sqrt())
}

fn cosine(y: &HyperspectralImage, i: usize, j: usize) -> f64 {
    let (a, b) = (y.pixel(i), y.pixel(j));
    let denom = (a.dot(&a) * b.dot(&b)).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(&b) / denom).clamp(-1.0, 1.0)
}

/// Mean cosine similarity between the centre of a random 5×5 patch and its
/// 24 patch neighbors, over [`LAMBDA_PATCHES`] patches drawn with
/// replacement. Pairs involving a zero pixel contribute 0.
pub fn estimate_lambda0(y: &HyperspectralImage, seed: u64) -> Result<f64> {
    let (h, w) = (y.height(), y.width());
    if h < PATCH_SIDE || w < PATCH_SIDE {
        return Err(Error::Degenerate(format!(
            "image {h}x{w} is smaller than a {PATCH_SIDE}x{PATCH_SIDE} patch"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = PATCH_SIDE / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for _ in 0..LAMBDA_PATCHES {
        let top = rng.random_range(0..=h - PATCH_SIDE);
        let left = rng.random_range(0..=w - PATCH_SIDE);
        let centre = y.index(top + half, left + half);
        for r in top..top + PATCH_SIDE {
            for c in left..left + PATCH_SIDE {
                let j = y.index(r, c);
                if j != centre {
                    total += cosine(y, centre, j);
                    count += 1;
                }
            }
        }
    }
    Ok(total / count as f64)
}

fn linear_grid(lo: f64, hi: f64) -> Vec<f64> {
    Array1::linspace(lo, hi, GRID_POINTS).to_vec()
}

/// Grids of [`GRID_POINTS`] equally spaced values over `[0.1·α₀, 10·α₀]`
/// and `[1e-4·λ₀, 10·λ₀]`. A zero estimate is replaced by `1e-6`.
pub fn make_grids(alpha0: f64, lambda0: f64) -> Result<ParamEstimate> {
    let fix = |name: &str, v: f64| -> Result<f64> {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::param(format!("{name} must be nonnegative, got {v}")));
        }
        if v == 0.0 {
            log::warn!("{name} is zero; substituting {ZERO_SUBSTITUTE}");
            return Ok(ZERO_SUBSTITUTE);
        }
        Ok(v)
    };
    let alpha0 = fix("alpha0", alpha0)?;
    let lambda0 = fix("lambda0", lambda0)?;
    Ok(ParamEstimate {
        alpha0,
        lambda0,
        alpha_grid: linear_grid(0.1 * alpha0, 10.0 * alpha0),
        lambda_grid: linear_grid(1e-4 * lambda0, 10.0 * lambda0),
    })
}

/// Estimates both weights from `y` and builds the search grids.
pub fn estimate(y: &HyperspectralImage, seed: u64) -> Result<ParamEstimate> {
    make_grids(estimate_alpha0(y)?, estimate_lambda0(y, seed)?)
}

/// The doubling factors `2^-4 … 2^4`.
pub fn doubling_factors() -> [f64; 9] {
    DOUBLING_EXPONENTS.map(|e| 2f64.powi(e))
}
