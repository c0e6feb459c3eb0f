//! Monte-Carlo sweeps. Trial `t` uses seed `seed + t` for its noise, its
//! weight estimates and its solver initialization, so any trial can be
//! rerun alone. Jobs run in parallel; rows are emitted in job order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;
use ssnmf::data::{add_gaussian_noise, SNR_LADDER_DB};
use ssnmf::params::{doubling_factors, DOUBLING_EXPONENTS};
use ssnmf::{evaluate, GroundTruth, HyperspectralImage};

use crate::args::{ParamSweepArgs, Snr, SolverArgs, SourceArgs, SweepArgs, Variant};
use crate::experiment::{
    build_graph, check_variants, endmember_count, ensure_dir, load_source, mean_std, resolve_weights, solve,
    solver_json, Weights,
};
use crate::manifest;

/// Outcome of one solver run inside a sweep.
#[derive(Debug, Clone)]
pub struct Row {
    pub snr: Snr,
    pub trial: usize,
    pub seed: u64,
    pub label: String,
    pub lambda: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mean_sad: f64,
    pub mean_rmse: f64,
}

struct Setup {
    clean: HyperspectralImage,
    truth: GroundTruth,
    k: usize,
    source: serde_json::Value,
}

fn setup(source: &SourceArgs, solver: &SolverArgs, seed: u64) -> Result<Setup> {
    let src = load_source(source, seed)?;
    let truth = src.truth.context(
        "evaluation needs ground truth: pass --truth-endmembers and --truth-abundances with --cube",
    )?;
    let k = endmember_count(solver, Some(&truth))?;
    Ok(Setup {
        clean: src.image,
        truth,
        k,
        source: src.description,
    })
}

/// Noisy image and resolved weights for one trial.
fn prepare(clean: &HyperspectralImage, snr: Snr, solver: &SolverArgs, seed: u64) -> Result<(HyperspectralImage, Weights)> {
    let image = add_gaussian_noise(clean, snr.0, seed)?;
    let weights = resolve_weights(&image, solver, seed)?;
    Ok((image, weights))
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    image: &HyperspectralImage,
    graph: Option<&ssnmf::NeighborGraph>,
    setup: &Setup,
    weights: (f64, f64),
    solver: &SolverArgs,
    snr: Snr,
    trial: usize,
    seed: u64,
    label: String,
) -> Result<Row> {
    let result = solve(image, graph, setup.k, weights, solver, seed)?;
    let report = evaluate(&result, &setup.truth)?;
    Ok(Row {
        snr,
        trial,
        seed,
        label,
        lambda: weights.0,
        alpha: weights.1,
        iterations: result.iterations,
        converged: result.converged,
        mean_sad: report.mean_sad,
        mean_rmse: report.mean_rmse,
    })
}

fn levels(requested: &[Snr], default: &[f64]) -> Vec<Snr> {
    if requested.is_empty() {
        default.iter().map(|&v| Snr(v)).collect()
    } else {
        requested.to_vec()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Per-run rows: `snr_db,trial,seed,<key>,lambda,alpha,iterations,converged,mean_sad,mean_rmse`.
pub fn trials_csv(rows: &[Row], key: &str) -> String {
    let mut out = format!("snr_db,trial,seed,{key},lambda,alpha,iterations,converged,mean_sad,mean_rmse\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.snr, r.trial, r.seed, r.label, r.lambda, r.alpha, r.iterations, r.converged, r.mean_sad, r.mean_rmse
        )
        .unwrap();
    }
    out
}

/// Groups rows by `(snr, label)` in first-seen order and reduces each group
/// to `trials,sad_mean,sad_std,rmse_mean,rmse_std`.
type Summary = (Snr, String, usize, (f64, f64), (f64, f64));

fn summarize(rows: &[Row]) -> Vec<Summary> {
    let mut keys: Vec<(Snr, String)> = Vec::new();
    for r in rows {
        let key = (r.snr, r.label.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(snr, label)| {
            let group: Vec<&Row> = rows.iter().filter(|r| r.snr == snr && r.label == label).collect();
            let sad: Vec<f64> = group.iter().map(|r| r.mean_sad).collect();
            let rmse: Vec<f64> = group.iter().map(|r| r.mean_rmse).collect();
            (snr, label, group.len(), mean_std(&sad), mean_std(&rmse))
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let start = Instant::now();
    let dir = &args.common.out;
    let seed = args.common.seed;
    anyhow::ensure!(args.trials >= 1, "--trials must be at least 1");
    check_variants(&args.variants, &args.solver)?;
    let mut variants: Vec<Variant> = Vec::new();
    for v in &args.variants {
        if !variants.contains(v) {
            variants.push(*v);
        }
    }
    let setup = setup(&args.source, &args.solver, seed)?;
    let levels = levels(&args.snr, &SNR_LADDER_DB);
    let jobs: Vec<(Snr, usize)> = levels
        .iter()
        .flat_map(|&s| (0..args.trials).map(move |t| (s, t)))
        .collect();

    let per_job: Vec<Result<Vec<Row>>> = jobs
        .par_iter()
        .map(|&(snr, trial)| {
            let trial_seed = seed + trial as u64;
            let (image, weights) = prepare(&setup.clean, snr, &args.solver, trial_seed)?;
            let graph = if variants.iter().any(|v| v.uses_graph()) && weights.lambda > 0.0 {
                Some(build_graph(&image, &args.solver)?)
            } else {
                None
            };
            variants
                .iter()
                .map(|&v| {
                    run_one(
                        &image,
                        graph.as_ref(),
                        &setup,
                        weights.for_variant(v),
                        &args.solver,
                        snr,
                        trial,
                        trial_seed,
                        v.label().to_string(),
                    )
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }

    ensure_dir(dir)?;
    write_file(&dir.join("trials.csv"), &trials_csv(&rows, "variant"))?;
    let mut summary = String::from("snr_db,variant,trials,sad_mean,sad_std,rmse_mean,rmse_std\n");
    for (snr, label, n, (sm, ss), (rm, rs)) in summarize(&rows) {
        writeln!(summary, "{snr},{label},{n},{sm},{ss},{rm},{rs}").unwrap();
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    manifest::write(
        dir,
        "sweep",
        json!({
            "seed": seed,
            "trial_seeds": "seed + trial index",
            "trials": args.trials,
            "snr_db": levels.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "variants": variants.iter().map(|v| v.label()).collect::<Vec<_>>(),
            "source": setup.source,
            "solver": solver_json(&args.solver),
            "k": setup.k,
        }),
        json!({
            "runs": rows.len(),
            "wall_seconds": start.elapsed().as_secs_f64(),
            "files": ["trials.csv", "summary.csv"],
        }),
    )
}

pub fn param_sweep(args: &ParamSweepArgs) -> Result<()> {
    let start = Instant::now();
    let dir = &args.common.out;
    let seed = args.common.seed;
    anyhow::ensure!(args.trials >= 1, "--trials must be at least 1");
    let setup = setup(&args.source, &args.solver, seed)?;
    let levels = levels(&args.snr, &[f64::INFINITY]);
    let factors = doubling_factors();
    let jobs: Vec<(Snr, usize)> = levels
        .iter()
        .flat_map(|&s| (0..args.trials).map(move |t| (s, t)))
        .collect();

    let per_job: Vec<Result<(Vec<Row>, Weights)>> = jobs
        .par_iter()
        .map(|&(snr, trial)| {
            let trial_seed = seed + trial as u64;
            let (image, base) = prepare(&setup.clean, snr, &args.solver, trial_seed)?;
            let graph = if base.lambda > 0.0 {
                Some(build_graph(&image, &args.solver)?)
            } else {
                None
            };
            let rows = DOUBLING_EXPONENTS
                .iter()
                .zip(factors)
                .map(|(&e, f)| {
                    run_one(
                        &image,
                        graph.as_ref(),
                        &setup,
                        (f * base.lambda, f * base.alpha),
                        &args.solver,
                        snr,
                        trial,
                        trial_seed,
                        e.to_string(),
                    )
                })
                .collect::<Result<Vec<Row>>>()?;
            Ok((rows, base))
        })
        .collect();
    let mut rows = Vec::new();
    let mut baselines = Vec::new();
    for (job, r) in jobs.iter().zip(per_job) {
        let (r, base) = r?;
        rows.extend(r);
        baselines.push(json!({
            "snr_db": job.0.to_string(),
            "trial": job.1,
            "weights": base.to_json(),
        }));
    }

    ensure_dir(dir)?;
    write_file(&dir.join("param_trials.csv"), &trials_csv(&rows, "exponent"))?;
    let mut table = String::from("snr_db,exponent,factor,trials,sad_mean,sad_std,rmse_mean,rmse_std\n");
    for (snr, label, n, (sm, ss), (rm, rs)) in summarize(&rows) {
        let e: i32 = label.parse().expect("exponent label");
        writeln!(table, "{snr},{e},{},{n},{sm},{ss},{rm},{rs}", 2f64.powi(e)).unwrap();
    }
    write_file(&dir.join("param_sweep.csv"), &table)?;
    manifest::write(
        dir,
        "param-sweep",
        json!({
            "seed": seed,
            "trial_seeds": "seed + trial index",
            "trials": args.trials,
            "snr_db": levels.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "exponents": DOUBLING_EXPONENTS,
            "source": setup.source,
            "solver": solver_json(&args.solver),
            "k": setup.k,
        }),
        json!({
            "baselines": baselines,
            "runs": rows.len(),
            "wall_seconds": start.elapsed().as_secs_f64(),
            "files": ["param_trials.csv", "param_sweep.csv"],
        }),
    )
}
