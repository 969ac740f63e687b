use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "deconv", version, about = "Deconvolution density and distribution estimation for noisy linear processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a linear process and add measurement noise.
    #[command(version)]
    Simulate(SimulateArgs),
    /// Tabulate the deconvolution kernel g_n and its integral G_n.
    #[command(version)]
    Gn(GnArgs),
    /// Estimate the density or distribution function from a series file.
    #[command(version)]
    Estimate(EstimateArgs),
    /// Compute a bandwidth.
    #[command(version)]
    Bandwidth(BandwidthArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    #[command(version)]
    Mc(McArgs),
    /// Fit the log-log MSE slope of a records file.
    #[command(version, name = "rate-fit")]
    RateFit(RateFitArgs),
}

#[derive(Debug, Args)]
#[group(id = "coefficients", multiple = false)]
pub struct CoefficientArgs {
    /// Long-memory power-law coefficients c_k = k^-gamma.
    #[arg(long, group = "coefficients")]
    pub gamma: Option<f64>,
    /// Geometric coefficients c_k = phi^k.
    #[arg(long, group = "coefficients", allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Moving-average weights c_1,...,c_q (c_0 = 1).
    #[arg(long, group = "coefficients", value_delimiter = ',', allow_negative_numbers = true)]
    pub ma: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub coefficients: CoefficientArgs,
    /// Truncation lag M of the moving-average filter.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Noise law: none, laplace:s, gamma:k:s, gauss:sigma, cauchy:s.
    #[arg(long, default_value = "none")]
    pub noise: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV with columns index,x,y.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Support [-d, d] of the kernel's characteristic function.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// Flatness order m of (1 - t²/d²)^m.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    #[arg(long, default_value_t = 0.005)]
    pub dx: f64,
    #[arg(long, default_value_t = 200.0)]
    pub x_max: f64,
    /// Gauss-Legendre nodes on [-d, d].
    #[arg(long, default_value_t = 4096)]
    pub nodes: usize,
}

#[derive(Debug, Args)]
pub struct GnArgs {
    #[arg(long)]
    pub noise: String,
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Output CSV with columns x,gn,Gn; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateKindArg {
    Density,
    Cdf,
    Kde,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Series CSV; the y column is used when present, otherwise x.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "none")]
    pub noise: String,
    /// Bandwidth: a number or "auto".
    #[arg(long, default_value = "auto")]
    pub h: String,
    /// Evaluation points: comma list or lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, value_enum, default_value = "density")]
    pub kind: EstimateKindArg,
    /// Memory exponent of the process, used by --h auto.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Supersmooth bandwidth parameter theta.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Bandwidth constant C.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Output CSV (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Density,
    Undersmoothed,
    Cdf,
    Supersmooth,
    Pilot,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[arg(long)]
    pub n: usize,
    /// Noise exponent beta.
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value = "density")]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Partial-sum variance for the cdf rule (default n^(3-2 gamma), or n).
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Supersmooth exponent constant a.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Kernel support d for the supersmooth rule.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads (falls back to DECONV_THREADS).
    #[arg(long, env = "DECONV_THREADS")]
    pub threads: Option<usize>,
    /// Output directory, overriding the config's.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateFitArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub theory_slope: f64,
    #[arg(long, default_value_t = 0.12)]
    pub tolerance: f64,
    /// Only use records at this evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
}
