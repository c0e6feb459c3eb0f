use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde_json::json;
use ssnmf::data::table::write_endmembers;
use ssnmf::data::{add_gaussian_noise, load_cube, render_grayscale, render_pseudocolor, save_cube, synthesize_scene};
use ssnmf::solver::write_objective_trace;
use ssnmf::{evaluate, HyperspectralImage, UnmixingResult};

use crate::args::{ConvergenceArgs, GraphExportArgs, Snr, SynthArgs, UnmixArgs, Variant};
use crate::experiment::{
    abundance_cube, build_graph, check_variants, endmember_count, ensure_dir, graph_json, load_source, load_truth,
    resolve_weights, scene_json, solve, solver_json,
};
use crate::manifest;

pub mod sweep;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_csv_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_trace(path: &Path, result: &UnmixingResult) -> Result<()> {
    let mut out = create(path)?;
    write_objective_trace(&result.objective_trace, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_factors(dir: &Path, image: &HyperspectralImage, result: &UnmixingResult) -> Result<Vec<String>> {
    let mut files = vec!["endmembers.csv".to_string(), "abundances.cube".to_string()];
    let mut out = create(&dir.join("endmembers.csv"))?;
    write_endmembers(&result.endmembers, image.band_ids(), &mut out)?;
    out.flush()?;
    save_cube(&abundance_cube(&result.abundances, image)?, dir.join("abundances.cube"))?;
    for k in 0..result.abundances.count() {
        let name = format!("abundance_{}.pgm", k + 1);
        render_grayscale(result.abundances.map(k), image.height(), image.width(), dir.join(&name))?;
        files.push(name);
    }
    if result.abundances.count() <= 4 {
        render_pseudocolor(&result.abundances, image.height(), image.width(), dir.join("abundances.ppm"))?;
        files.push("abundances.ppm".into());
    }
    Ok(files)
}

fn noisy(image: &HyperspectralImage, snr: Option<Snr>, seed: u64) -> Result<HyperspectralImage> {
    match snr {
        Some(s) => Ok(add_gaussian_noise(image, s.0, seed)?),
        None => Ok(image.clone()),
    }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let dir = &args.common.out;
    ensure_dir(dir)?;
    let seed = args.common.seed;
    let (clean, truth) = synthesize_scene(&args.scene.spec(seed))?;
    let image = noisy(&clean, args.snr, seed)?;
    save_cube(&image, dir.join("scene.cube"))?;
    let mut out = create(&dir.join("truth_endmembers.csv"))?;
    write_endmembers(&truth.endmembers, None, &mut out)?;
    out.flush()?;
    save_cube(&abundance_cube(&truth.abundances, &image)?, dir.join("truth_abundances.cube"))?;
    manifest::write(
        dir,
        "synth",
        json!({
            "seed": seed,
            "scene": scene_json(&args.scene, seed),
            "snr_db": args.snr.map(|s| s.to_string()),
        }),
        json!({ "files": ["scene.cube", "truth_endmembers.csv", "truth_abundances.cube"] }),
    )
}

pub fn unmix(args: &UnmixArgs) -> Result<()> {
    let dir = &args.common.out;
    let seed = args.common.seed;
    let image = load_cube(&args.cube).with_context(|| format!("reading {}", args.cube.display()))?;
    let truth = match (&args.truth_endmembers, &args.truth_abundances) {
        (Some(m), Some(a)) => Some(load_truth(m, a, &image)?),
        _ => None,
    };
    let k = endmember_count(&args.solver, truth.as_ref())?;
    let weights = resolve_weights(&image, &args.solver, seed)?;
    let variant = Variant::classify(weights.lambda, weights.alpha);
    let graph = if weights.lambda > 0.0 {
        Some(build_graph(&image, &args.solver)?)
    } else {
        None
    };
    let result = solve(&image, graph.as_ref(), k, (weights.lambda, weights.alpha), &args.solver, seed)?;

    ensure_dir(dir)?;
    let mut files = write_factors(dir, &image, &result)?;
    write_trace(&dir.join("trace.csv"), &result)?;
    files.push("trace.csv".into());
    let mut evaluation = serde_json::Value::Null;
    if let Some(truth) = &truth {
        let report = evaluate(&result, truth)?;
        let mut out = create(&dir.join("eval.csv"))?;
        report.write_csv(&mut out, false)?;
        out.flush()?;
        files.push("eval.csv".into());
        evaluation = json!({ "mean_sad": report.mean_sad, "mean_rmse": report.mean_rmse });
    }
    manifest::write(
        dir,
        "unmix",
        json!({
            "cube": args.cube.display().to_string(),
            "seed": seed,
            "solver": solver_json(&args.solver),
            "k": k,
        }),
        json!({
            "variant": variant.label(),
            "weights": weights.to_json(),
            "iterations": result.iterations,
            "converged": result.converged,
            "final_objective": result.objective_trace.last().map(|o| o.total),
            "wall_seconds": {
                "graph_build": result.wall_times.graph_build,
                "iterate": result.wall_times.iterate,
            },
            "evaluation": evaluation,
            "files": files,
        }),
    )
}

pub fn convergence(args: &ConvergenceArgs) -> Result<()> {
    let dir = &args.common.out;
    let seed = args.common.seed;
    check_variants(&args.variants, &args.solver)?;
    let source = load_source(&args.source, seed)?;
    let k = endmember_count(&args.solver, source.truth.as_ref())?;
    let image = noisy(&source.image, args.snr, seed)?;
    let weights = resolve_weights(&image, &args.solver, seed)?;
    let needs_graph = args.variants.iter().any(|v| v.uses_graph()) && weights.lambda > 0.0;
    let graph = if needs_graph {
        Some(build_graph(&image, &args.solver)?)
    } else {
        None
    };

    ensure_dir(dir)?;
    let mut timing = String::from("variant,iterations,converged,t_construct_graph,t_iteration,t_convergence\n");
    let mut runs = Vec::new();
    let mut seen = Vec::new();
    for &variant in &args.variants {
        if seen.contains(&variant) {
            continue;
        }
        seen.push(variant);
        let lambda_alpha = weights.for_variant(variant);
        let result = solve(&image, graph.as_ref(), k, lambda_alpha, &args.solver, seed)?;
        write_trace(&dir.join(format!("trace_{variant}.csv")), &result)?;
        let t_graph = if lambda_alpha.0 > 0.0 {
            result.wall_times.graph_build
        } else {
            0.0
        };
        let t_iter = result.wall_times.iterate;
        timing.push_str(&format!(
            "{variant},{},{},{t_graph},{t_iter},{}\n",
            result.iterations,
            result.converged,
            t_graph + t_iter
        ));
        runs.push(json!({
            "variant": variant.label(),
            "lambda": lambda_alpha.0,
            "alpha": lambda_alpha.1,
            "iterations": result.iterations,
            "converged": result.converged,
        }));
    }
    write_csv_file(&dir.join("timing.csv"), &timing)?;
    manifest::write(
        dir,
        "convergence",
        json!({
            "seed": seed,
            "source": source.description,
            "snr_db": args.snr.map(|s| s.to_string()).unwrap_or_else(|| "inf".into()),
            "solver": solver_json(&args.solver),
            "k": k,
        }),
        json!({ "weights": weights.to_json(), "runs": runs }),
    )
}

pub fn graph_export(args: &GraphExportArgs) -> Result<()> {
    let dir = &args.common.out;
    let image = load_cube(&args.cube).with_context(|| format!("reading {}", args.cube.display()))?;
    let graph = ssnmf::build_neighbor_graph(&image, args.graph.params()).context("building neighbor graph")?;
    ensure!(graph.node_count() == image.pixels(), "graph does not cover the image");
    ensure_dir(dir)?;
    let mut out = create(&dir.join("graph.edges"))?;
    graph.write_edge_list(&mut out)?;
    out.flush()?;
    manifest::write(
        dir,
        "graph-export",
        json!({ "cube": args.cube.display().to_string(), "graph": graph_json(&args.graph) }),
        json!({
            "nodes": graph.node_count(),
            "edges": graph.edge_count(),
            "build_seconds": graph.build_seconds(),
            "files": ["graph.edges"],
        }),
    )
}
