//! Spatially regularized sparse nonnegative matrix factorization for
//! hyperspectral unmixing.
//!
//! An image `Y` (bands × pixels) is factored as `Y ≈ M·A` with nonnegative
//! endmember spectra `M` and abundances `A` by minimizing
//!
//! ```text
//! ½‖Y − MA‖²_F + (λ/2)·Tr(A L Aᵀ) + α‖A‖₁
//! ```
//!
//! where `L = D − W` is the Laplacian of a pixel neighbor graph built from
//! spectral similarity inside a local window. Setting `λ = 0` or `α = 0`
//! recovers the lasso-only and graph-only variants, and both zero gives
//! plain multiplicative-update NMF.
//!
//! ```no_run
//! use ssnmf::{build_neighbor_graph, run, GraphParams, SolverConfig};
//! # fn main() -> ssnmf::Result<()> {
//! let y = ssnmf::data::load_cube("scene.cube")?;
//! let graph = build_neighbor_graph(&y, GraphParams::default())?;
//! let est = ssnmf::params::estimate(&y, 0)?;
//! let config = SolverConfig::new(4).with_regularization(est.lambda0, est.alpha0);
//! let result = run(&y, &graph, &config)?;
//! println!("{} iterations", result.iterations);
//! # Ok(())
//! # }
//! ```

/// Version of this library, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod params;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_factors, match_endmembers, rmse, sad_metric, EvalReport};
pub use graph::{
    build_neighbor_graph, laplacian_quadratic, sad, GraphParams, NeighborGraph, WeightMode,
};
pub use model::{lmm_synthesize, objective, smooth_gradients};
pub use params::ParamEstimate;
pub use solver::{run, NormMode, SolverConfig, UnmixingResult, WallTimes};
pub use types::{AbundanceMatrix, EndmemberMatrix, GroundTruth, HyperspectralImage, Objective};
