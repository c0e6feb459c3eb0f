//! Linear mixing forward model and the regularized objective.

use ndarray::{Array2, Axis};

use crate::data::noise::gaussian_field;
use crate::error::{Error, Result};
use crate::graph::{laplacian_quadratic, weights_product, NeighborGraph};
use crate::types::{AbundanceMatrix, EndmemberMatrix, HyperspectralImage, Objective};

pub(crate) fn check_factors(
    y: &HyperspectralImage,
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
) -> Result<()> {
    if m.bands() != y.bands() {
        return Err(Error::shape(format!(
            "endmembers have {} bands, image has {}",
            m.bands(),
            y.bands()
        )));
    }
    if a.pixels() != y.pixels() {
        return Err(Error::shape(format!(
            "abundances cover {} pixels, image has {}",
            a.pixels(),
            y.pixels()
        )));
    }
    if m.count() != a.count() {
        return Err(Error::shape(format!(
            "{} endmembers but {} abundance rows",
            m.count(),
            a.count()
        )));
    }
    Ok(())
}

pub(crate) fn check_graph(y: &HyperspectralImage, graph: &NeighborGraph) -> Result<()> {
    if graph.node_count() != y.pixels() {
        return Err(Error::shape(format!(
            "graph has {} nodes, image has {} pixels",
            graph.node_count(),
            y.pixels()
        )));
    }
    Ok(())
}

pub(crate) fn check_weight(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::param(format!(
            "{name} must be finite and nonnegative, got {value}"
        )));
    }
    Ok(())
}

/// Forward model `Y = M·A + E` on a `height × width` grid, with `E` i.i.d.
/// Gaussian of standard deviation `noise_sigma`. Negative entries of the
/// result are clamped to zero.
pub fn lmm_synthesize(
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    height: usize,
    width: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<HyperspectralImage> {
    if m.count() != a.count() {
        return Err(Error::shape(format!(
            "{} endmembers but {} abundance rows",
            m.count(),
            a.count()
        )));
    }
    check_weight("noise sigma", noise_sigma)?;
    let mut y = m.data().dot(a.data());
    if noise_sigma > 0.0 {
        y += &gaussian_field(y.nrows(), y.ncols(), noise_sigma, seed);
        y.mapv_inplace(|v| v.max(0.0));
    }
    HyperspectralImage::new(height, width, y)
}

/// `½‖Y − MA‖²_F`.
pub(crate) fn fit_term(y: &Array2<f64>, m: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let mut residual = m.dot(a);
    residual -= y;
    0.5 * residual.iter().map(|r| r * r).sum::<f64>()
}

/// Evaluates the objective and its three parts.
pub fn objective(
    y: &HyperspectralImage,
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    graph: &NeighborGraph,
    lambda: f64,
    alpha: f64,
) -> Result<Objective> {
    check_factors(y, m, a)?;
    check_graph(y, graph)?;
    check_weight("lambda", lambda)?;
    check_weight("alpha", alpha)?;
    let fit = fit_term(y.data(), m.data(), a.data());
    let graph_term = if lambda == 0.0 {
        0.0
    } else {
        // Rounding can push an exactly-zero quadratic form a hair below zero.
        0.5 * lambda * laplacian_quadratic(a, graph)?.max(0.0)
    };
    let lasso = alpha * a.data().sum();
    Ok(Objective::from_parts(fit, graph_term, lasso))
}

/// Gradients of the smooth part `½‖Y − MA‖² + (λ/2)Tr(A L Aᵀ)`:
/// `(M AAᵀ − Y Aᵀ, MᵀM A − MᵀY + λ A L)`. The lasso gradient, the constant
/// `α` on the positive orthant, is left to the caller.
pub fn smooth_gradients(
    y: &HyperspectralImage,
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    graph: &NeighborGraph,
    lambda: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_factors(y, m, a)?;
    check_graph(y, graph)?;
    check_weight("lambda", lambda)?;
    let (y, m, a) = (y.data(), m.data(), a.data());
    let grad_m = m.dot(&a.dot(&a.t())) - y.dot(&a.t());
    let mut grad_a = m.t().dot(m).dot(a) - m.t().dot(y);
    if lambda != 0.0 {
        let degrees = ndarray::ArrayView1::from(graph.degrees());
        let mut laplacian = a * &degrees.insert_axis(Axis(0));
        laplacian -= &weights_product(a, graph);
        grad_a.scaled_add(lambda, &laplacian);
    }
    Ok((grad_m, grad_a))
}
