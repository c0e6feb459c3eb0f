//! Multiplicative-update solver for graph-Laplacian + lasso regularized NMF.
//!
//! One iteration updates the abundances, then the endmembers, then moves
//! the scale of every endmember column into the matching abundance row:
//!
//! ```text
//! A ← A ⊙ (MᵀY + λ A W) ⊘ (MᵀM A + λ A D + α + ε)
//! M ← M ⊙ (Y Aᵀ)        ⊘ (M A Aᵀ + ε)
//! m_k ← m_k / ‖m_k‖,  a_k ← a_k · ‖m_k‖
//! ```
//!
//! Setting `λ = 0` drops the graph term, `α = 0` drops the lasso term, and
//! both together give plain Frobenius NMF.

use std::io::Write;
use std::time::Instant;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{laplacian_form, weights_product, NeighborGraph};
use crate::model::{check_factors, check_graph, check_weight, fit_term};
use crate::types::{AbundanceMatrix, EndmemberMatrix, HyperspectralImage, Objective};

pub const DEFAULT_TAU: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_EPSILON: f64 = 1e-12;
/// Candidates scored per pick when seeding the endmembers.
pub const INIT_CANDIDATE_BATCH: usize = 100;

/// Column normalization used to fix the scale ambiguity `MA = (MU)(U⁻¹A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    #[default]
    L2Columns,
    L1Columns,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of endmembers.
    pub k: usize,
    /// Graph regularization weight.
    pub lambda: f64,
    /// Lasso weight.
    pub alpha: f64,
    /// Stop once the relative objective change drops below this.
    pub tau: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Floor added to every multiplicative denominator.
    pub epsilon: f64,
    pub norm_mode: NormMode,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            lambda: 0.0,
            alpha: 0.0,
            tau: DEFAULT_TAU,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            norm_mode: NormMode::L2Columns,
        }
    }

    pub fn with_regularization(mut self, lambda: f64, alpha: f64) -> Self {
        self.lambda = lambda;
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::param("endmember count must be at least 1"));
        }
        check_weight("lambda", self.lambda)?;
        check_weight("alpha", self.alpha)?;
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::param(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WallTimes {
    /// Seconds spent building the neighbor graph.
    pub graph_build: f64,
    /// Seconds spent in initialization and the update loop.
    pub iterate: f64,
}

impl WallTimes {
    pub fn total(&self) -> f64 {
        self.graph_build + self.iterate
    }
}

#[derive(Debug, Clone)]
pub struct UnmixingResult {
    pub endmembers: EndmemberMatrix,
    pub abundances: AbundanceMatrix,
    /// Objective of the initial (scale-normalized) factors at index 0, then
    /// after each completed iteration.
    pub objective_trace: Vec<Objective>,
    pub iterations: usize,
    /// Whether the relative-change rule fired before the iteration cap.
    pub converged: bool,
    pub wall_times: WallTimes,
}

fn column_norms(data: &Array2<f64>) -> Vec<f64> {
    data.columns()
        .into_iter()
        .map(|c| c.dot(&c).sqrt())
        .collect()
}

fn angle(x: ArrayView1<'_, f64>, nx: f64, y: ArrayView1<'_, f64>, ny: f64) -> f64 {
    (x.dot(&y) / (nx * ny)).clamp(-1.0, 1.0).acos()
}

/// Seeds `M` with `k` pixels of `y`: the first uniformly at random among
/// nonzero pixels, each later one the candidate (from a random batch of
/// [`INIT_CANDIDATE_BATCH`]) whose smallest spectral angle to the pixels
/// already picked is largest.
pub fn init_endmembers(y: &HyperspectralImage, k: usize, seed: u64) -> Result<EndmemberMatrix> {
    if k == 0 {
        return Err(Error::param("endmember count must be at least 1"));
    }
    let n = y.pixels();
    if n == 0 || y.bands() == 0 {
        return Err(Error::Degenerate("empty image".into()));
    }
    if k > n {
        return Err(Error::param(format!("{k} endmembers requested from {n} pixels")));
    }
    let data = y.data();
    let norms = column_norms(data);
    let valid: Vec<usize> = (0..n).filter(|&i| norms[i] > 0.0).collect();
    if valid.len() < k {
        return Err(Error::Degenerate(format!(
            "only {} nonzero pixels for {k} endmembers",
            valid.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![valid[rng.random_range(0..valid.len())]];
    while chosen.len() < k {
        let batch = index::sample(&mut rng, valid.len(), INIT_CANDIDATE_BATCH.min(valid.len()));
        let mut best: Option<(f64, usize)> = None;
        for slot in batch.iter() {
            let cand = valid[slot];
            if chosen.contains(&cand) {
                continue;
            }
            let score = chosen
                .iter()
                .map(|&c| angle(data.column(cand), norms[cand], data.column(c), norms[c]))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, cand));
            }
        }
        let pick = match best {
            Some((_, cand)) => cand,
            // Every batch member was already taken; fall back to any free pixel.
            None => {
                let free: Vec<usize> = valid.iter().copied().filter(|v| !chosen.contains(v)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(pick);
    }

    let mut m = Array2::zeros((y.bands(), k));
    for (col, &pixel) in chosen.iter().enumerate() {
        m.column_mut(col).assign(&data.column(pixel));
    }
    EndmemberMatrix::new(m)
}

/// Random positive `k × n` abundances with unit column sums.
pub fn init_abundances(k: usize, n: usize, seed: u64) -> Result<AbundanceMatrix> {
    if k == 0 || n == 0 {
        return Err(Error::param(format!("abundance shape {k}x{n} must be nonempty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    // 1 − U[0,1) lies in (0, 1], so every entry is strictly positive.
    let mut a = Array2::from_shape_simple_fn((k, n), || 1.0 - rng.random::<f64>());
    for mut col in a.columns_mut() {
        let s = col.sum();
        col.mapv_inplace(|v| v / s);
    }
    AbundanceMatrix::new(a)
}

fn endmember_step(y: &Array2<f64>, m: &Array2<f64>, a: &Array2<f64>, eps: f64) -> Array2<f64> {
    let numer = y.dot(&a.t());
    let denom = m.dot(&a.dot(&a.t()));
    let mut out = m.clone();
    ndarray::Zip::from(&mut out)
        .and(&numer)
        .and(&denom)
        .for_each(|v, &num, &den| *v *= num / (den + eps));
    out
}

fn abundance_step(
    y: &Array2<f64>,
    m: &Array2<f64>,
    a: &Array2<f64>,
    graph: &NeighborGraph,
    lambda: f64,
    alpha: f64,
    eps: f64,
) -> Array2<f64> {
    let mut numer = m.t().dot(y);
    let mut denom = m.t().dot(m).dot(a);
    if lambda != 0.0 {
        numer.scaled_add(lambda, &weights_product(a, graph));
        let degrees = ArrayView1::from(graph.degrees()).insert_axis(Axis(0));
        denom.scaled_add(lambda, &(a * &degrees));
    }
    let mut out = a.clone();
    ndarray::Zip::from(&mut out)
        .and(&numer)
        .and(&denom)
        .for_each(|v, &num, &den| *v *= num / (den + alpha + eps));
    out
}

fn rescale_in_place(m: &mut Array2<f64>, a: &mut Array2<f64>, mode: NormMode) {
    for k in 0..m.ncols() {
        let col = m.column(k);
        let scale = match mode {
            NormMode::L2Columns => col.dot(&col).sqrt(),
            NormMode::L1Columns => col.sum(),
        };
        if scale == 0.0 || !scale.is_finite() {
            log::warn!("endmember column {k} has norm {scale}; left unscaled");
            continue;
        }
        m.column_mut(k).mapv_inplace(|v| v / scale);
        a.row_mut(k).mapv_inplace(|v| v * scale);
    }
}

/// One multiplicative endmember update with denominator floor `epsilon`.
pub fn update_endmembers(
    y: &HyperspectralImage,
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    epsilon: f64,
) -> Result<EndmemberMatrix> {
    check_factors(y, m, a)?;
    EndmemberMatrix::new(endmember_step(y.data(), m.data(), a.data(), epsilon))
}

/// One multiplicative abundance update with denominator floor `epsilon`.
pub fn update_abundances(
    y: &HyperspectralImage,
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    graph: &NeighborGraph,
    lambda: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<AbundanceMatrix> {
    check_factors(y, m, a)?;
    check_graph(y, graph)?;
    check_weight("lambda", lambda)?;
    check_weight("alpha", alpha)?;
    AbundanceMatrix::new(abundance_step(
        y.data(),
        m.data(),
        a.data(),
        graph,
        lambda,
        alpha,
        epsilon,
    ))
}

/// Normalizes each endmember column and scales the matching abundance row
/// by the same factor, leaving `MA` unchanged. All-zero columns are skipped.
pub fn rescale(
    m: &EndmemberMatrix,
    a: &AbundanceMatrix,
    mode: NormMode,
) -> Result<(EndmemberMatrix, AbundanceMatrix)> {
    if m.count() != a.count() {
        return Err(Error::shape(format!(
            "{} endmembers but {} abundance rows",
            m.count(),
            a.count()
        )));
    }
    let (mut md, mut ad) = (m.data().clone(), a.data().clone());
    rescale_in_place(&mut md, &mut ad, mode);
    Ok((EndmemberMatrix::new(md)?, AbundanceMatrix::new(ad)?))
}

fn evaluate(
    y: &Array2<f64>,
    m: &Array2<f64>,
    a: &Array2<f64>,
    graph: &NeighborGraph,
    config: &SolverConfig,
) -> Result<Objective> {
    let fit = fit_term(y, m, a);
    let graph_term = if config.lambda == 0.0 {
        0.0
    } else {
        0.5 * config.lambda * laplacian_form(a, graph).max(0.0)
    };
    let objective = Objective::from_parts(fit, graph_term, config.alpha * a.sum());
    if !objective.total.is_finite() {
        return Err(Error::Numerical(format!(
            "objective became {} (fit {}, graph {}, lasso {})",
            objective.total, objective.fit, objective.graph, objective.lasso
        )));
    }
    Ok(objective)
}

/// Runs the full unmixing loop on `y` with a prebuilt `graph` (use
/// [`NeighborGraph::empty`] when `lambda` is zero).
pub fn run(y: &HyperspectralImage, graph: &NeighborGraph, config: &SolverConfig) -> Result<UnmixingResult> {
    config.validate()?;
    check_graph(y, graph)?;
    if config.k > y.bands().min(y.pixels()) {
        log::warn!(
            "{} endmembers exceeds min(bands, pixels) = {}",
            config.k,
            y.bands().min(y.pixels())
        );
    }
    let start = Instant::now();
    let m0 = init_endmembers(y, config.k, config.seed)?;
    let a0 = init_abundances(config.k, y.pixels(), config.seed)?;
    let (mut m, mut a) = (m0.into_inner(), a0.into_inner());
    rescale_in_place(&mut m, &mut a, config.norm_mode);

    let data = y.data();
    let mut trace = vec![evaluate(data, &m, &a, graph, config)?];
    let mut converged = false;
    for _ in 0..config.max_iter {
        a = abundance_step(data, &m, &a, graph, config.lambda, config.alpha, config.epsilon);
        m = endmember_step(data, &m, &a, config.epsilon);
        rescale_in_place(&mut m, &mut a, config.norm_mode);
        if m.iter().chain(a.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite factor entries at iteration {}",
                trace.len()
            )));
        }
        let previous = trace.last().unwrap().total;
        let current = evaluate(data, &m, &a, graph, config)?;
        trace.push(current);
        if previous == 0.0 || (previous - current.total).abs() / previous < config.tau {
            converged = true;
            break;
        }
    }

    Ok(UnmixingResult {
        endmembers: EndmemberMatrix::new(m)?,
        abundances: AbundanceMatrix::new(a)?,
        iterations: trace.len() - 1,
        objective_trace: trace,
        converged,
        wall_times: WallTimes {
            graph_build: graph.build_seconds(),
            iterate: start.elapsed().as_secs_f64(),
        },
    })
}

/// Writes the trace as CSV rows `iter,total,fit,graph,lasso`.
pub fn write_objective_trace<W: Write>(trace: &[Objective], mut out: W) -> Result<()> {
    writeln!(out, "iter,total,fit,graph,lasso")?;
    for (i, o) in trace.iter().enumerate() {
        writeln!(out, "{i},{},{},{},{}", o.total, o.fit, o.graph, o.lasso)?;
    }
    Ok(())
}
