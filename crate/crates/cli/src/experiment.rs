use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde_json::{json, Value};
use ssnmf::data::table::read_endmembers;
use ssnmf::data::{load_cube, synthesize_scene};
use ssnmf::params::{estimate_alpha0, estimate_lambda0};
use ssnmf::{
    build_neighbor_graph, AbundanceMatrix, GroundTruth, HyperspectralImage, NeighborGraph, SolverConfig,
    UnmixingResult,
};

use crate::args::{GraphArgs, SceneArgs, SolverArgs, SourceArgs, Variant};

/// Input image, its ground truth when known, and how it was obtained.
pub struct Source {
    pub image: HyperspectralImage,
    pub truth: Option<GroundTruth>,
    pub description: Value,
}

pub fn load_truth(endmembers: &Path, abundances: &Path, image: &HyperspectralImage) -> Result<GroundTruth> {
    let file = File::open(endmembers).with_context(|| format!("opening {}", endmembers.display()))?;
    let (m, _) = read_endmembers(BufReader::new(file)).with_context(|| format!("reading {}", endmembers.display()))?;
    let maps = load_cube(abundances).with_context(|| format!("reading {}", abundances.display()))?;
    let truth = GroundTruth::new(m, AbundanceMatrix::new(maps.into_data())?)?;
    truth.check_against(image).context("ground truth does not match the cube")?;
    Ok(truth)
}

pub fn load_source(args: &SourceArgs, seed: u64) -> Result<Source> {
    match &args.cube {
        Some(path) => {
            let image = load_cube(path).with_context(|| format!("reading {}", path.display()))?;
            let truth = match (&args.truth_endmembers, &args.truth_abundances) {
                (Some(m), Some(a)) => Some(load_truth(m, a, &image)?),
                (None, None) => None,
                _ => bail!("--truth-endmembers and --truth-abundances must be given together"),
            };
            Ok(Source {
                image,
                truth,
                description: json!({ "cube": path.display().to_string() }),
            })
        }
        None => {
            let spec = args.scene.spec(seed);
            let (image, truth) = synthesize_scene(&spec)?;
            Ok(Source {
                image,
                truth: Some(truth),
                description: json!({ "scene": scene_json(&args.scene, seed) }),
            })
        }
    }
}

pub fn scene_json(s: &SceneArgs, seed: u64) -> Value {
    json!({
        "height": s.height,
        "width": s.width,
        "bands": s.bands,
        "k": s.scene_k,
        "seed": seed,
        "blob_count": s.blob_count,
        "mixing_sparsity": s.mixing_sparsity,
        "smoothness": s.smoothness,
    })
}

pub fn graph_json(g: &GraphArgs) -> Value {
    json!({
        "window": g.window,
        "keep_fraction": g.keep_frac,
        "weight_mode": ssnmf::WeightMode::from(g.weight_mode).to_string(),
    })
}

pub fn solver_json(s: &SolverArgs) -> Value {
    json!({
        "k": s.k,
        "lambda": s.lambda,
        "alpha": s.alpha,
        "tau": s.tau,
        "max_iter": s.max_iter,
        "no_graph": s.no_graph,
        "graph": graph_json(&s.graph),
    })
}

/// Effective regularization weights and which of them were estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub lambda: f64,
    pub alpha: f64,
    pub lambda_estimated: bool,
    pub alpha_estimated: bool,
}

impl Weights {
    pub fn for_variant(&self, v: Variant) -> (f64, f64) {
        (
            if v.uses_graph() { self.lambda } else { 0.0 },
            if v.uses_lasso() { self.alpha } else { 0.0 },
        )
    }

    pub fn to_json(self) -> Value {
        json!({
            "lambda": self.lambda,
            "alpha": self.alpha,
            "lambda_estimated": self.lambda_estimated,
            "alpha_estimated": self.alpha_estimated,
        })
    }
}

/// Uses `--lambda`/`--alpha` when given and the data-driven estimates
/// otherwise. `--no-graph` pins λ to 0.
pub fn resolve_weights(image: &HyperspectralImage, args: &SolverArgs, seed: u64) -> Result<Weights> {
    for (name, v) in [("lambda", args.lambda), ("alpha", args.alpha)] {
        if let Some(v) = v {
            ensure!(v >= 0.0 && v.is_finite(), "--{name} must be finite and nonnegative, got {v}");
        }
    }
    let (lambda, lambda_estimated) = match (args.no_graph, args.lambda) {
        (true, Some(l)) if l > 0.0 => bail!("--no-graph conflicts with --lambda {l}"),
        (true, _) => (0.0, false),
        (false, Some(l)) => (l, false),
        (false, None) => (estimate_lambda0(image, seed).context("estimating lambda")?, true),
    };
    let (alpha, alpha_estimated) = match args.alpha {
        Some(a) => (a, false),
        None => (estimate_alpha0(image).context("estimating alpha")?, true),
    };
    Ok(Weights {
        lambda,
        alpha,
        lambda_estimated,
        alpha_estimated,
    })
}

pub fn check_variants(variants: &[Variant], args: &SolverArgs) -> Result<()> {
    ensure!(!variants.is_empty(), "no variants selected");
    if args.no_graph {
        if let Some(v) = variants.iter().find(|v| v.uses_graph()) {
            bail!("variant {v} needs the neighbor graph but --no-graph is set");
        }
    }
    Ok(())
}

pub fn endmember_count(args: &SolverArgs, truth: Option<&GroundTruth>) -> Result<usize> {
    let k = match (args.k, truth) {
        (Some(k), Some(t)) if k != t.k() => bail!("--k {k} differs from the ground truth's {} endmembers", t.k()),
        (Some(k), _) => k,
        (None, Some(t)) => t.k(),
        (None, None) => bail!("--k is required when no ground truth is available"),
    };
    ensure!(k >= 2, "--k must be at least 2, got {k}");
    Ok(k)
}

pub fn build_graph(image: &HyperspectralImage, args: &SolverArgs) -> Result<NeighborGraph> {
    build_neighbor_graph(image, args.graph.params()).context("building neighbor graph")
}

/// Runs the solver; the graph is only consulted when `lambda > 0`.
pub fn solve(
    image: &HyperspectralImage,
    graph: Option<&NeighborGraph>,
    k: usize,
    (lambda, alpha): (f64, f64),
    args: &SolverArgs,
    seed: u64,
) -> Result<UnmixingResult> {
    let config = SolverConfig {
        tau: args.tau,
        max_iter: args.max_iter,
        ..SolverConfig::new(k).with_regularization(lambda, alpha).with_seed(seed)
    };
    let empty;
    let graph = match graph {
        Some(g) if lambda > 0.0 => g,
        _ => {
            empty = NeighborGraph::empty(image.pixels());
            &empty
        }
    };
    Ok(ssnmf::run(image, graph, &config)?)
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Abundances as a cube with one band per endmember.
pub fn abundance_cube(a: &AbundanceMatrix, image: &HyperspectralImage) -> Result<HyperspectralImage> {
    Ok(HyperspectralImage::new(image.height(), image.width(), a.data().clone())?)
}
