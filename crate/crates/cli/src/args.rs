//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bip-lab",
    version,
    about = "Optimal transport, curvature and Sobolev checks on finite metric measure spaces",
    after_help = "Exit status: 0 when every check passes, 1 when a check fails, 2 on input errors.\n\
                  BIPLAB_THREADS caps the worker threads; BIPLAB_SEED (default 0) seeds random pair sampling."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the metric and measure axioms of a space.
    Validate(ValidateArgs),
    /// Optimal transport cost between two measures.
    Wasserstein(WassersteinArgs),
    /// Dyadic geodesic with density caps, written as a per-time trace.
    Interpolate(InterpolateArgs),
    /// Check a bounded-interpolation profile on a list of pairs.
    BipVerify(BipVerifyArgs),
    /// Entropy convexity checks along dyadic geodesics.
    CurvatureCheck(CurvatureArgs),
    /// Minimal weak upper gradient over a family of geodesic plans.
    Sobolev(SobolevArgs),
    /// Profile stability along an embedded sequence of spaces.
    Pmgh(PmghArgs),
    /// Merge reports, or run a batch of commands and merge their rows.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where the check report goes.
#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Report file; nothing is written when absent.
    #[arg(long = "report", value_name = "PATH")]
    pub path: Option<PathBuf>,
    /// JSON is nested with the full module report, CSV has one row per check.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct WassersteinArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub mu0: PathBuf,
    #[arg(long)]
    pub mu1: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Optimal coupling as CSV with columns source, target, mass.
    #[arg(long, value_name = "PATH")]
    pub coupling: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub mu0: PathBuf,
    #[arg(long)]
    pub mu1: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Curvature parameter driving the per-level density factor.
    #[arg(long = "K", allow_negative_numbers = true, default_value_t = 0.0)]
    pub k: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Target constant: every interpolant should stay below it times the input norm.
    #[arg(long)]
    pub c_target: Option<f64>,
    /// Trace CSV with columns time, point, mass, density, level_cap.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// The measure at time 1/2 as measure JSON.
    #[arg(long, value_name = "PATH")]
    pub midpoint: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

/// Pairs from a file, or drawn at random from ball restrictions.
#[derive(Debug, Clone, Args)]
pub struct PairSource {
    #[arg(long, required_unless_present = "random_pairs")]
    pub pairs: Option<PathBuf>,
    /// Number of random ball-restriction pairs, seeded by BIPLAB_SEED.
    #[arg(long, conflicts_with = "pairs")]
    pub random_pairs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BipVerifyArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[command(flatten)]
    pub pairs: PairSource,
    /// Profile as inline JSON, e.g. '{"kind":"cd_infty","K":-1}', or a path to a JSON file.
    #[arg(long)]
    pub profile: String,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureKind {
    #[value(name = "cd_infty")]
    CdInfty,
    #[value(name = "mcp")]
    Mcp,
    #[value(name = "cd_negative")]
    CdNegative,
}

#[derive(Debug, Clone, Args)]
pub struct CurvatureArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long, value_enum)]
    pub kind: CurvatureKind,
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: f64,
    /// Dimension; required for mcp and cd_negative.
    #[arg(long = "N", allow_negative_numbers = true)]
    pub n: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[command(flatten)]
    pub pairs: PairSource,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Contraction centre for mcp; each pair contributes its first measure.
    #[arg(long)]
    pub o: Option<usize>,
    /// Exponents N' in [N, 0) for cd_negative; defaults to N alone.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub n_grid: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

/// Inputs shared by the Sobolev commands.
#[derive(Debug, Clone, Args)]
pub struct SobolevCommon {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub f: PathBuf,
    /// Plan exponent; defaults to the conjugate of the Sobolev exponent.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub family_depth: usize,
    /// Number of base endpoint pairs in the family.
    #[arg(long, default_value_t = 64)]
    pub pair_budget: usize,
    #[command(flatten)]
    pub output: Output,
}

/// Field-for-field [`SobolevCommon`] with optional paths, so that the
/// `compare` subcommand can stand alone.
#[derive(Debug, Clone, Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
pub struct SobolevArgs {
    #[command(subcommand)]
    pub mode: Option<SobolevMode>,
    #[arg(long, required = true)]
    pub space: Option<PathBuf>,
    #[arg(long, required = true)]
    pub f: Option<PathBuf>,
    /// Plan exponent; defaults to the conjugate of the Sobolev exponent.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub family_depth: usize,
    /// Number of base endpoint pairs in the family.
    #[arg(long, default_value_t = 64)]
    pub pair_budget: usize,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Second function for the Leibniz check.
    #[arg(long)]
    pub g: Option<PathBuf>,
    /// Gradient CSV with columns point, value.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// The gradient as function JSON.
    #[arg(long, value_name = "PATH")]
    pub gradient_json: Option<PathBuf>,
}

impl SobolevArgs {
    pub fn common(&self) -> Option<SobolevCommon> {
        Some(SobolevCommon {
            space: self.space.clone()?,
            f: self.f.clone()?,
            q: self.q,
            family_depth: self.family_depth,
            pair_budget: self.pair_budget,
            output: self.output.clone(),
        })
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum SobolevMode {
    /// Minimal gradients for two exponents side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: SobolevCommon,
    #[arg(long)]
    pub p1: f64,
    #[arg(long)]
    pub p2: f64,
    /// Largest pointwise difference still reported as agreement.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// CSV with columns point, g1, g2.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PmghArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Tolerance on the profile gaps for the limsup hypothesis.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Reports or command outputs to merge.
    #[arg(long, num_args = 1.., required_unless_present = "batch")]
    pub inputs: Vec<PathBuf>,
    /// JSON list of argument lists, each one command, run in parallel.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}
