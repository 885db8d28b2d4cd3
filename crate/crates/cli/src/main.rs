use clap::{Parser, Subcommand, ValueEnum};
use copula_transport::Category;
use std::path::PathBuf;

mod commands;

/// Optimal-transport distances between empirical copulas of multivariate
/// time series.
///
/// All randomness is seeded (default seed 42); identical invocations
/// produce byte-identical output regardless of --jobs.
#[derive(Parser)]
#[command(name = "copula-transport", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank-transform a CSV panel to its empirical copula (CSV out).
    Transform(TransformArgs),
    /// Transport distance between two signature JSON files.
    Emd(EmdArgs),
    /// Intra-dependence distance between two CSV panels.
    Intra(IntraArgs),
    /// Target Dependencies Coefficient between two CSV panels (JSON out).
    Tdc(TdcArgs),
    /// Pairwise distance matrix over a manifest of panels (JSON out).
    Matrix(MatrixArgs),
    /// Agglomerative clustering of a distance matrix (JSON out).
    Cluster(ClusterArgs),
    /// Power-versus-noise benchmark over synthetic patterns (CSV out).
    Power(PowerArgs),
    /// Synthetic data generators.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(clap::Args)]
struct TransformArgs {
    /// Input CSV: header row, one row per time step.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV of normalized ranks, same header.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum SolverArg {
    Exact,
    Sinkhorn,
}

#[derive(clap::Args)]
struct EmdArgs {
    /// Left signature JSON.
    #[arg(long)]
    a: PathBuf,
    /// Right signature JSON.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    solver: SolverArg,
    /// Entropic regularization strength (sinkhorn only).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Marginal error tolerance (sinkhorn only).
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget (sinkhorn only).
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(clap::Args)]
struct IntraArgs {
    /// First panel CSV.
    #[arg(long)]
    a: PathBuf,
    /// Second panel CSV (may differ in length, not in channel count).
    #[arg(long)]
    b: PathBuf,
    /// Bins per axis; defaults by dimension (16 for d=2, 8 for d=3, else 4).
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(clap::Args)]
struct TdcArgs {
    /// First panel CSV.
    #[arg(long)]
    x: PathBuf,
    /// Second panel CSV, same length and channel count.
    #[arg(long)]
    y: PathBuf,
    /// Targets JSON; defaults to the comonotone/countermonotone pair.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Bins per axis on the stacked space; defaults by dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for sampled pattern targets without their own seed.
    #[arg(long, default_value_t = copula_transport::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum MatrixModeArg {
    /// Transport distance between each pair's own copulas.
    Intra,
    /// 1 - TDC of each pair (requires an even split: x = panel i, y = panel j).
    Tdc,
}

#[derive(clap::Args)]
struct MatrixArgs {
    /// Manifest JSON listing panel CSVs (paths relative to the manifest).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "intra")]
    mode: MatrixModeArg,
    #[arg(long)]
    grid: Option<usize>,
    /// Targets JSON for tdc mode.
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, env = "COPULA_TRANSPORT_JOBS")]
    jobs: Option<usize>,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum LinkageArg {
    Single,
    Complete,
    Average,
}

#[derive(clap::Args)]
struct ClusterArgs {
    /// Distance matrix JSON (as written by `matrix`).
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value = "average")]
    linkage: LinkageArg,
    /// Number of clusters to cut the dendrogram into.
    #[arg(long)]
    k: usize,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum NullArg {
    Resample,
    Permute,
}

#[derive(clap::Args)]
struct PowerArgs {
    /// Comma-separated: tdc, pearson, spearman, dcor, rdc.
    #[arg(long, default_value = "tdc,pearson,spearman,dcor,rdc")]
    estimators: String,
    /// Comma-separated pattern names; default is the eight noise shapes.
    #[arg(long)]
    patterns: Option<String>,
    /// Comma-separated noise levels; default 0, 1/3, ..., 3.
    #[arg(long)]
    levels: Option<String>,
    /// Trials per null/alternative ensemble (at least 100).
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Observations per trial.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = copula_transport::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value = "resample")]
    null: NullArg,
    /// Grid resolution of the tdc estimator.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, env = "COPULA_TRANSPORT_JOBS")]
    jobs: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// One bivariate pattern draw as CSV (columns x,y).
    Pattern(GenPatternArgs),
    /// A labeled panel dataset: CSV per panel plus a manifest.
    Dataset(GenDatasetArgs),
    /// Bivariate Gaussian sample with given correlation (columns x,y).
    Gaussian(GenGaussianArgs),
}

#[derive(clap::Args)]
struct GenPatternArgs {
    /// linear, quadratic, cubic, sine_low, sine_high, fourth_root, circle,
    /// step, or independence.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = copula_transport::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct GenDatasetArgs {
    /// Comma-separated class names: comonotone, countermonotone, or a
    /// bivariate pattern name.
    #[arg(long, default_value = "comonotone,countermonotone")]
    classes: String,
    #[arg(long, default_value_t = 5)]
    per_class: usize,
    /// Channels per panel (comonotone accepts any d >= 2, the rest need 2).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Time steps per panel.
    #[arg(long, default_value_t = 500)]
    t: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = copula_transport::DEFAULT_SEED)]
    seed: u64,
    /// Directory for the CSVs and manifest.json (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
struct GenGaussianArgs {
    /// Correlation in [-1, 1].
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = copula_transport::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(match e.category() {
            Category::Usage => 2,
            Category::Data => 3,
            Category::Numerical => 4,
        });
    }
}
