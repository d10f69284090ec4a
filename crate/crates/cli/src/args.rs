use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "graphspec", version, about = "Fit and select random-graph models from adjacency spectra")]
pub struct Cli {
    /// Worker threads for replicates, grid points and candidates.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a random graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Eigenvalue density or distribution function of a graph.
    Spectrum(SpectrumArgs),
    /// Tabulate a closed-form limiting law.
    Law(LawArgs),
    /// Estimate the parameter of one model family.
    Fit(FitArgs),
    /// Fit several families and rank them.
    Select(SelectArgs),
    /// Run a simulation experiment from a configuration file.
    Experiment(ExperimentArgs),
    /// Limiting spectral density of a block model.
    BmDensity(BmDensityArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Er,
    Dr,
    Grg,
    Ws,
    Ba,
    Bm,
}

/// Model parameters shared by `generate` and block-model commands.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    /// Edge probability (ER).
    #[arg(long)]
    pub p: Option<f64>,
    /// Degree (DR).
    #[arg(long)]
    pub d: Option<usize>,
    /// Connection radius (GRG).
    #[arg(long)]
    pub r: Option<f64>,
    /// Rewiring probability (WS).
    #[arg(long = "pr")]
    pub p_r: Option<f64>,
    /// Even neighborhood size (WS).
    #[arg(long)]
    pub k: Option<usize>,
    /// Preferential-attachment exponent (BA).
    #[arg(long = "ps")]
    pub p_s: Option<f64>,
    /// Edges per new vertex (BA).
    #[arg(long)]
    pub m: Option<usize>,
    /// Block sizes, comma separated (BM).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Off-block probability (BM).
    #[arg(long)]
    pub p0: Option<f64>,
    /// Pairwise off-block probabilities, rows separated by ';' (BM).
    #[arg(long = "p0-matrix")]
    pub p0_matrix: Option<String>,
    /// Within-block probabilities, comma separated (BM).
    #[arg(long, value_delimiter = ',')]
    pub pin: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    pub model: Family,
    /// Vertex count (defaults to the sum of block sizes for BM).
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub params: ModelFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingFlag {
    SqrtN,
    Raw,
    ErVariance,
    DrScaled,
    DrCentered,
    BmCentered,
    BmUncentered,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Edge-list file.
    pub input: PathBuf,
    /// Vertex ids in the file start at 1.
    #[arg(long)]
    pub one_based: bool,
    #[arg(long, value_enum, default_value = "sqrt-n")]
    pub scaling: ScalingFlag,
    /// Shorthand for --scaling raw.
    #[arg(long)]
    pub raw: bool,
    /// Write the kernel density (default).
    #[arg(long, conflicts_with = "cdf")]
    pub density: bool,
    /// Write the empirical distribution function instead.
    #[arg(long)]
    pub cdf: bool,
    /// Kernel bandwidth: `auto` (Silverman) or a positive number.
    #[arg(long, default_value = "auto")]
    pub sigma: String,
    #[arg(long, default_value_t = graphspec::spectrum::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Parameters of the scaling (p, d, block structure, p*).
    #[command(flatten)]
    pub params: ModelFlags,
    /// p* for bm-uncentered scaling.
    #[arg(long = "p-star")]
    pub p_star: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    Semicircle,
    SemicircleP,
    KestenMckay,
    KestenMckayScaled,
}

#[derive(Args, Debug)]
pub struct LawArgs {
    pub law: LawKind,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = graphspec::spectrum::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Tabulate the distribution function instead of the density.
    #[arg(long)]
    pub cdf: bool,
    /// Convolve the density with a Gaussian kernel of this bandwidth.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchFlag {
    Grid,
    Golden,
    GridGolden,
}

/// Options shared by `fit` and `select`.
#[derive(Args, Debug, Clone)]
pub struct FitFlags {
    /// kl, l1-density or l1-cdf.
    #[arg(long, default_value = "l1-density")]
    pub divergence: String,
    /// Monte-Carlo replicates per model curve.
    #[arg(long, default_value_t = graphspec::fitting::DEFAULT_MC_SAMPLES)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Always use Monte-Carlo curves, even where a closed-form law exists.
    #[arg(long)]
    pub no_analytic: bool,
    /// Compare density divergences with the bare law instead of the law
    /// smoothed by the observed kernel.
    #[arg(long)]
    pub no_smooth_law: bool,
    #[arg(long, default_value_t = graphspec::spectrum::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Golden-section tolerance.
    #[arg(long, default_value_t = graphspec::fitting::DEFAULT_GOLDEN_TOL)]
    pub tolerance: f64,
    /// WS neighborhood size used by the fitted model.
    #[arg(long, default_value_t = graphspec::generators::DEFAULT_WS_K)]
    pub ws_k: usize,
    /// BA edges per new vertex used by the fitted model.
    #[arg(long, default_value_t = graphspec::generators::DEFAULT_BA_M)]
    pub ba_m: usize,
    /// Equal blocks assumed by the fitted block model.
    #[arg(long, default_value_t = graphspec::fitting::DEFAULT_BM_BLOCKS)]
    pub bm_blocks: usize,
    #[arg(long)]
    pub one_based: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub model: Family,
    /// Bounds `lo:hi` (two comma-separated boxes for BM); per-family default when omitted.
    #[arg(long)]
    pub space: Option<String>,
    /// Grid step of the search.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_enum)]
    pub search: Option<SearchFlag>,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    pub input: PathBuf,
    /// Candidate families, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "er,grg,ws,ba")]
    pub candidates: Vec<Family>,
    /// Scale every default grid step by this factor (coarser when > 1).
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    pub config: PathBuf,
    /// Directory for report.json and the CSV artifacts.
    #[arg(long, default_value = "experiment-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BmDensityArgs {
    #[command(flatten)]
    pub params: ModelFlags,
    /// Imaginary offset of the evaluation points.
    #[arg(long, default_value_t = graphspec::laws::DEFAULT_ETA)]
    pub eta: f64,
    /// Grid spacing; defaults to eta/2 so the offset resolves the curve.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Explicit point count (overrides --grid-step).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Half-width of the grid; defaults to 1.1 times the support bound.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
