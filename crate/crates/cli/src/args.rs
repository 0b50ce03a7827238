use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ipszeta",
    version,
    about = "Transfer operators, spectra, IPS zeta functions and Domany-Kinzel simulation"
)]
pub struct Cli {
    /// Worker threads for trials, grid points and basis vectors (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Largest N for dense matrix construction.
    #[arg(long, global = true, default_value_t = 14)]
    pub max_dense: usize,

    /// Largest N for dense eigensolves (at most 12).
    #[arg(long, global = true, default_value_t = 10)]
    pub max_eigen: usize,

    /// Largest N for matrix-free application.
    #[arg(long, global = true, default_value_t = 26)]
    pub max_matrix_free: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operator construction.
    #[command(subcommand)]
    Op(OpCommand),
    /// Eigenvalue multiset of Q_N, with an optional histogram.
    Spectrum(SpectrumArgs),
    /// Zeta coefficients C_r and zeta values.
    Zeta(ZetaArgs),
    /// Numerical check of an operator identity.
    Verify(VerifyArgs),
    /// Domany-Kinzel Monte Carlo.
    #[command(subcommand)]
    Dk(DkCommand),
}

#[derive(Debug, Subcommand)]
pub enum OpCommand {
    /// Writes the local operator (json) or the dense global operator (csv).
    Build(BuildArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Dk,
    Qca,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "dk")]
    pub model: ModelKind,
    /// DK single-parent birth probability.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// DK two-parent birth probability.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// QCA rotation angle.
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    /// Operator JSON for --model custom.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of sites; defaults to the value in --file, else 3.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Also write a histogram CSV over [-1,1]^2 to this path.
    #[arg(long)]
    pub hist: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub bin: f64,
    /// Residual tolerance for sampled eigenpairs.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ZetaArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Highest coefficient C_r to compute.
    #[arg(long)]
    pub rmax: Option<usize>,
    /// Evaluate zeta at u (real part).
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Imaginary part of u.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u_im: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Claim {
    Lemma1,
    Corollary,
    Prop1,
    Prop2,
    Theorem2,
    Theorem3,
    Remark,
    Stochastic,
    Unitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomFamily {
    Ca,
    Pca,
    Qca,
    General,
    /// Real operators with unit column sums meeting the t condition.
    T,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub claim: Claim,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Draw local operators from a random family instead of --model.
    #[arg(long, value_enum)]
    pub random: Option<RandomFamily>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Highest r for coefficient checks.
    #[arg(long, default_value_t = 20)]
    pub rmax: usize,
    /// Override the claim's default tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DkCommand {
    /// Finite-horizon survival estimate.
    Survive(SurviveArgs),
    /// Survival estimates along a p grid at fixed q.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct SurviveArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// Horizon T.
    #[arg(long, default_value_t = 200)]
    pub t: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initially occupied sites A, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0",
        allow_hyphen_values = true
    )]
    pub seed_set: Vec<i64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub p_from: f64,
    #[arg(long)]
    pub p_to: f64,
    #[arg(long)]
    pub p_step: f64,
    #[arg(long, default_value_t = 200)]
    pub t: u64,
    #[arg(long, default_value_t = 2_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}
