use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssnmf::data::SceneSpec;
use ssnmf::graph::{DEFAULT_KEEP_FRACTION, DEFAULT_WINDOW};
use ssnmf::solver::{DEFAULT_MAX_ITER, DEFAULT_TAU};
use ssnmf::{GraphParams, WeightMode};

#[derive(Debug, Parser)]
#[command(name = "ssnmf", version, about = "Hyperspectral unmixing with structured sparse NMF")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Unmix one cube.
    Unmix(UnmixArgs),
    /// Noise-level × trial sweep over solver variants.
    Sweep(SweepArgs),
    /// Paired doubling sweep of λ and α around a baseline.
    ParamSweep(ParamSweepArgs),
    /// Per-iteration objective traces and timing per variant.
    Convergence(ConvergenceArgs),
    /// Build the neighbor graph of a cube and write it as an edge list.
    GraphExport(GraphExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightModeArg {
    Cosine,
    RawSad,
}

impl From<WeightModeArg> for WeightMode {
    fn from(m: WeightModeArg) -> Self {
        match m {
            WeightModeArg::Cosine => WeightMode::Cosine,
            WeightModeArg::RawSad => WeightMode::RawSad,
        }
    }
}

/// Solver variants; each fixes which regularizers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Variant {
    /// λ = α = 0.
    Nmf,
    /// Lasso only.
    L1nmf,
    /// Graph only.
    Gnmf,
    /// Graph and lasso.
    Ssnmf,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Nmf => "nmf",
            Variant::L1nmf => "l1nmf",
            Variant::Gnmf => "gnmf",
            Variant::Ssnmf => "ssnmf",
        }
    }

    /// Label of a run with the given effective weights.
    pub fn classify(lambda: f64, alpha: f64) -> Self {
        match (lambda > 0.0, alpha > 0.0) {
            (false, false) => Variant::Nmf,
            (false, true) => Variant::L1nmf,
            (true, false) => Variant::Gnmf,
            (true, true) => Variant::Ssnmf,
        }
    }

    pub fn uses_graph(self) -> bool {
        matches!(self, Variant::Gnmf | Variant::Ssnmf)
    }

    pub fn uses_lasso(self) -> bool {
        matches!(self, Variant::L1nmf | Variant::Ssnmf)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Signal-to-noise ratio in dB; `inf` disables noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr(pub f64);

impl FromStr for Snr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = match s.trim() {
            "∞" => f64::INFINITY,
            t => t.parse::<f64>().map_err(|_| format!("not a number: {s}"))?,
        };
        if v > 0.0 {
            Ok(Snr(v))
        } else {
            Err(format!("SNR must be positive or inf, got {s}"))
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Side of the square neighbor window (odd).
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Fraction of window candidates kept as neighbors.
    #[arg(long = "keep-frac", default_value_t = DEFAULT_KEEP_FRACTION)]
    pub keep_frac: f64,
    #[arg(long = "weight-mode", value_enum, default_value_t = WeightModeArg::Cosine)]
    pub weight_mode: WeightModeArg,
}

impl GraphArgs {
    pub fn params(&self) -> GraphParams {
        GraphParams {
            window: self.window,
            keep_fraction: self.keep_frac,
            mode: self.weight_mode.into(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of endmembers (defaults to the scene's k for synthetic input).
    #[arg(long)]
    pub k: Option<usize>,
    /// Graph weight; estimated from the data when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lasso weight; estimated from the data when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Skip graph construction (forces λ = 0).
    #[arg(long = "no-graph")]
    pub no_graph: bool,
    #[command(flatten)]
    pub graph: GraphArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 40)]
    pub bands: usize,
    /// Endmembers in the generated scene.
    #[arg(long = "scene-k", default_value_t = 4)]
    pub scene_k: usize,
    #[arg(long = "blob-count", default_value_t = 3)]
    pub blob_count: usize,
    #[arg(long = "mixing-sparsity", default_value_t = 2)]
    pub mixing_sparsity: usize,
    #[arg(long, default_value_t = 2)]
    pub smoothness: usize,
}

impl SceneArgs {
    pub fn spec(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            height: self.height,
            width: self.width,
            k: self.scene_k,
            bands: self.bands,
            seed,
            blob_count: self.blob_count,
            mixing_sparsity: self.mixing_sparsity,
            smoothness: self.smoothness,
        }
    }
}

/// A cube with its ground truth, or a synthetic scene when `--cube` is absent.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Input cube; a synthetic scene is generated when omitted.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Ground-truth endmember CSV for `--cube`.
    #[arg(long = "truth-endmembers", requires = "cube")]
    pub truth_endmembers: Option<PathBuf>,
    /// Ground-truth abundance cube for `--cube`.
    #[arg(long = "truth-abundances", requires = "cube")]
    pub truth_abundances: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "ssnmf-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Add noise at this SNR to the written cube (truth stays clean).
    #[arg(long)]
    pub snr: Option<Snr>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct UnmixArgs {
    /// Input cube.
    pub cube: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Ground-truth endmember CSV; with `--truth-abundances` enables evaluation.
    #[arg(long = "truth-endmembers", requires = "truth_abundances")]
    pub truth_endmembers: Option<PathBuf>,
    #[arg(long = "truth-abundances", requires = "truth_endmembers")]
    pub truth_abundances: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Noise levels in dB (repeatable); defaults to inf,30,25,20,15,10,8.
    #[arg(long = "snr")]
    pub snr: Vec<Snr>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Variant::Nmf, Variant::L1nmf, Variant::Gnmf, Variant::Ssnmf])]
    pub variants: Vec<Variant>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ParamSweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Noise levels in dB (repeatable); defaults to inf.
    #[arg(long = "snr")]
    pub snr: Vec<Snr>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Noise level in dB; defaults to inf.
    #[arg(long)]
    pub snr: Option<Snr>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Variant::Nmf, Variant::Ssnmf])]
    pub variants: Vec<Variant>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GraphExportArgs {
    /// Input cube.
    pub cube: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}
