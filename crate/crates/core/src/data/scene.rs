//! Synthetic scenes with regionally smooth, sparsely mixed abundances.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::lmm_synthesize;
use crate::types::{AbundanceMatrix, EndmemberMatrix, GroundTruth, HyperspectralImage};

/// Smallest pairwise spectral angle accepted between generated endmembers.
const MIN_ENDMEMBER_ANGLE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    /// Number of endmembers.
    pub k: usize,
    pub bands: usize,
    pub seed: u64,
    /// Regions seeded per endmember.
    pub blob_count: usize,
    /// Largest number of endmembers active in one pixel.
    pub mixing_sparsity: usize,
    /// Box-blur radius in pixels applied to the region maps.
    pub smoothness: usize,
}

impl SceneSpec {
    pub fn new(height: usize, width: usize, k: usize, bands: usize) -> Self {
        Self {
            height,
            width,
            k,
            bands,
            seed: 0,
            blob_count: 3,
            mixing_sparsity: 2,
            smoothness: 2,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return Err(Error::param("scene dimensions must be positive"));
        }
        if self.k < 2 {
            return Err(Error::param(format!("scene needs at least 2 endmembers, got {}", self.k)));
        }
        if self.mixing_sparsity == 0 || self.mixing_sparsity > self.k {
            return Err(Error::param(format!(
                "mixing sparsity must lie in 1..={}, got {}",
                self.k, self.mixing_sparsity
            )));
        }
        if self.blob_count == 0 {
            return Err(Error::param("blob count must be positive"));
        }
        Ok(())
    }
}

/// Smooth positive spectrum: a baseline plus three Gaussian bumps.
fn random_spectrum(bands: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let span = bands as f64;
    let baseline = rng.random_range(0.05..0.3);
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.0..span),
                rng.random_range(span / 10.0..span / 3.0).max(1.0),
                rng.random_range(0.2..1.0),
            )
        })
        .collect();
    let mut s = Array1::from_shape_fn(bands, |l| {
        let x = l as f64;
        baseline
            + bumps
                .iter()
                .map(|(c, w, a)| a * (-0.5 * ((x - c) / w).powi(2)).exp())
                .sum::<f64>()
    });
    let norm = s.dot(&s).sqrt();
    s /= norm;
    s
}

fn endmembers(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::zeros((spec.bands, spec.k));
    let mut k = 0;
    let mut attempts = 0;
    while k < spec.k {
        let s = random_spectrum(spec.bands, rng);
        attempts += 1;
        let distinct = (0..k).all(|j| {
            let c = m.column(j).dot(&s).clamp(-1.0, 1.0);
            c.acos() >= MIN_ENDMEMBER_ANGLE
        });
        // Very few bands may make distinct spectra impossible; give up on the
        // separation requirement rather than loop forever.
        if distinct || attempts > 200 {
            m.column_mut(k).assign(&s);
            k += 1;
            attempts = 0;
        }
    }
    m
}

/// Separable box blur with border truncation.
fn box_blur(map: &Array2<f64>, radius: usize) -> Array2<f64> {
    if radius == 0 {
        return map.clone();
    }
    let (h, w) = map.dim();
    let mut tmp = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            tmp[[r, c]] = (lo..=hi).map(|j| map[[r, j]]).sum::<f64>() / (hi - lo + 1) as f64;
        }
    }
    let mut out = Array2::zeros((h, w));
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for c in 0..w {
            out[[r, c]] = (lo..=hi).map(|i| tmp[[i, c]]).sum::<f64>() / (hi - lo + 1) as f64;
        }
    }
    out
}

fn abundances(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (h, w, k) = (spec.height, spec.width, spec.k);
    // Seed point p belongs to endmember p % k; each pixel takes the label of
    // its nearest seed, giving blob_count Voronoi regions per endmember.
    let seeds: Vec<(f64, f64)> = (0..k * spec.blob_count)
        .map(|_| (rng.random_range(0.0..h as f64), rng.random_range(0.0..w as f64)))
        .collect();
    let mut maps = vec![Array2::<f64>::zeros((h, w)); k];
    for r in 0..h {
        for c in 0..w {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let nearest = seeds
                .iter()
                .enumerate()
                .map(|(p, (sy, sx))| ((y - sy).powi(2) + (x - sx).powi(2), p))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, p)| p)
                .expect("at least one seed");
            maps[nearest % k][[r, c]] = 1.0;
        }
    }
    let maps: Vec<Array2<f64>> = maps.iter().map(|m| box_blur(m, spec.smoothness)).collect();

    let mut a = Array2::zeros((k, h * w));
    let mut order: Vec<usize> = (0..k).collect();
    for r in 0..h {
        for c in 0..w {
            let n = r * w + c;
            order.sort_by(|&i, &j| maps[j][[r, c]].total_cmp(&maps[i][[r, c]]).then(i.cmp(&j)));
            let kept = &order[..spec.mixing_sparsity];
            let total: f64 = kept.iter().map(|&e| maps[e][[r, c]]).sum();
            for &e in kept {
                a[[e, n]] = maps[e][[r, c]] / total;
            }
        }
    }
    a
}

/// Generates a noiseless scene `Y = M·A` and its ground truth.
pub fn synthesize_scene(spec: &SceneSpec) -> Result<(HyperspectralImage, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = EndmemberMatrix::new(endmembers(spec, &mut rng))?;
    let a = AbundanceMatrix::new(abundances(spec, &mut rng))?;
    let y = lmm_synthesize(&m, &a, spec.height, spec.width, 0.0, 0)?;
    Ok((y, GroundTruth::new(m, a)?))
}
