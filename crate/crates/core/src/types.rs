//! Domain types shared by every stage of the unmixing pipeline.
//!
//! All matrices are dense `f64` with the conventions
//!
//! * image `Y`: `L × N` (bands × pixels), pixel `n = row * width + col`;
//! * endmembers `M`: `L × K`, one spectrum per column;
//! * abundances `A`: `K × N`, one abundance vector per column.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

fn check_nonnegative(data: &Array2<f64>, what: &str) -> Result<()> {
    if let Some(v) = data.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(Error::param(format!(
            "{what} must be finite and nonnegative, found {v}"
        )));
    }
    Ok(())
}

/// A nonnegative hyperspectral cube flattened to `bands × pixels`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperspectralImage {
    height: usize,
    width: usize,
    data: Array2<f64>,
    band_ids: Option<Vec<usize>>,
}

impl HyperspectralImage {
    pub fn new(height: usize, width: usize, data: Array2<f64>) -> Result<Self> {
        if height * width != data.ncols() {
            return Err(Error::shape(format!(
                "{height}x{width} grid needs {} pixel columns, data has {}",
                height * width,
                data.ncols()
            )));
        }
        check_nonnegative(&data, "image entries")?;
        Ok(Self {
            height,
            width,
            data,
            band_ids: None,
        })
    }

    /// Attaches the original (1-based) indices of the retained bands.
    pub fn with_band_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.bands() {
            return Err(Error::shape(format!(
                "{} band ids for {} bands",
                ids.len(),
                self.bands()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("band ids must be strictly increasing"));
        }
        self.band_ids = Some(ids);
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.data.nrows()
    }

    pub fn pixels(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn band_ids(&self) -> Option<&[usize]> {
        self.band_ids.as_deref()
    }

    pub fn pixel(&self, n: usize) -> ArrayView1<'_, f64> {
        self.data.column(n)
    }

    /// Linear index of grid position `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }
}

macro_rules! factor_matrix {
    ($(#[$doc:meta])* $name:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Array2<f64>);

        impl $name {
            pub fn new(data: Array2<f64>) -> Result<Self> {
                check_nonnegative(&data, $what)?;
                Ok(Self(data))
            }

            pub fn data(&self) -> &Array2<f64> {
                &self.0
            }

            pub fn view(&self) -> ArrayView2<'_, f64> {
                self.0.view()
            }

            pub fn into_inner(self) -> Array2<f64> {
                self.0
            }

            pub fn nrows(&self) -> usize {
                self.0.nrows()
            }

            pub fn ncols(&self) -> usize {
                self.0.ncols()
            }
        }
    };
}

factor_matrix!(
    /// Endmember signatures `M`, `L × K`.
    EndmemberMatrix,
    "endmember entries"
);

factor_matrix!(
    /// Fractional abundances `A`, `K × N`. Row `k` is the abundance map of
    /// endmember `k`.
    AbundanceMatrix,
    "abundance entries"
);

impl EndmemberMatrix {
    pub fn bands(&self) -> usize {
        self.0.nrows()
    }

    pub fn count(&self) -> usize {
        self.0.ncols()
    }
}

impl AbundanceMatrix {
    pub fn count(&self) -> usize {
        self.0.nrows()
    }

    pub fn pixels(&self) -> usize {
        self.0.ncols()
    }

    /// Abundance map of endmember `k` in pixel order.
    pub fn map(&self, k: usize) -> ArrayView1<'_, f64> {
        self.0.row(k)
    }
}

/// Reference factors for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub endmembers: EndmemberMatrix,
    pub abundances: AbundanceMatrix,
}

impl GroundTruth {
    pub fn new(endmembers: EndmemberMatrix, abundances: AbundanceMatrix) -> Result<Self> {
        if endmembers.count() != abundances.count() {
            return Err(Error::shape(format!(
                "truth has {} endmembers but {} abundance rows",
                endmembers.count(),
                abundances.count()
            )));
        }
        Ok(Self {
            endmembers,
            abundances,
        })
    }

    /// Checks that the truth describes `image`.
    pub fn check_against(&self, image: &HyperspectralImage) -> Result<()> {
        if self.endmembers.bands() != image.bands() || self.abundances.pixels() != image.pixels() {
            return Err(Error::shape(format!(
                "truth is {}x{}x{} but image is {} bands x {} pixels",
                self.endmembers.bands(),
                self.endmembers.count(),
                self.abundances.pixels(),
                image.bands(),
                image.pixels()
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.endmembers.count()
    }
}

/// Decomposed value of the regularized objective
/// `½‖Y − MA‖²_F + (λ/2)·Tr(A L Aᵀ) + α‖A‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub fit: f64,
    pub graph: f64,
    pub lasso: f64,
}

impl Objective {
    pub fn from_parts(fit: f64, graph: f64, lasso: f64) -> Self {
        Self {
            total: fit + graph + lasso,
            fit,
            graph,
            lasso,
        }
    }
}
