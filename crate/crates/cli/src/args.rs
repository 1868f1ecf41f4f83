use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qfin", version, about = "Quantum finance algorithms on an exact statevector simulator")]
pub struct Cli {
    /// Run seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for result files and the run manifest.
    #[arg(long, short, global = true, default_value = "qfin-out")]
    pub out: PathBuf,
    /// TOML file with default flag values, one table per command (`[risk.var]`, `[opt.auction]`, …).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print per-iteration tables.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Credit risk analysis.
    #[command(subcommand)]
    Risk(RiskCommand),
    /// Combinatorial optimisation problems.
    #[command(subcommand)]
    Opt(OptCommand),
    /// Variational classifier workflows.
    #[command(subcommand)]
    Ml(MlCommand),
    /// Amplitude estimation diagnostics.
    #[command(subcommand)]
    Ae(AeCommand),
    /// Re-run the command recorded in a manifest and check the outputs match.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum RiskCommand {
    /// Value at risk by amplitude-estimation bisection.
    Var(RiskVarArgs),
}

#[derive(Debug, Args)]
pub struct RiskVarArgs {
    /// CSV with `lgd,p0,rho` rows.
    #[arg(long, required_unless_present = "demo")]
    pub portfolio: Option<PathBuf>,
    /// Use the two-asset example portfolio instead of a file.
    #[arg(long, conflicts_with = "portfolio")]
    pub demo: bool,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Qubits of the latent factor register.
    #[arg(long, default_value_t = 2)]
    pub nz: usize,
    /// Evaluation qubits of amplitude estimation.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// The latent grid spans `[−z_bound, z_bound]`.
    #[arg(long, default_value_t = 3.0)]
    pub z_bound: f64,
    /// Also report the classical loss distribution and the quantum/classical deltas.
    #[arg(long)]
    pub exact_oracle: bool,
}

#[derive(Debug, Subcommand)]
pub enum OptCommand {
    /// Budget-constrained mean-variance asset selection.
    Portfolio(PortfolioArgs),
    /// Cluster stocks around representatives.
    Diversify(DiversifyArgs),
    /// Combinatorial auction winner determination.
    Auction(AuctionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    BruteForce,
    Vqe,
    Qaoa,
    Admm,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::BruteForce => "brute-force",
            Solver::Vqe => "vqe",
            Solver::Qaoa => "qaoa",
            Solver::Admm => "admm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuboSolverArg {
    BruteForce,
    Vqe,
    Qaoa,
}

/// Settings of the variational solvers.
#[derive(Debug, Args)]
pub struct VariationalArgs {
    /// Entangling rounds of the RY ansatz.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// QAOA layers.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// SPSA iterations per restart.
    #[arg(long, default_value_t = 300)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Most probable states reported per run.
    #[arg(long, default_value_t = 8)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct PortfolioArgs {
    /// CSV with `mu,cov_1,…,cov_n` rows.
    #[arg(long, conflicts_with = "synthetic")]
    pub instance: Option<PathBuf>,
    /// Generate a seeded instance with this many assets (default 6 without `--instance`).
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Risk factor.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// Number of assets to select (default `n/2`).
    #[arg(long)]
    pub budget: Option<usize>,
    /// Budget penalty weight (default twice the ℓ1 mass of the objective).
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long, value_enum, default_value_t = Solver::BruteForce)]
    pub solver: Solver,
    #[command(flatten)]
    pub variational: VariationalArgs,
    /// Write the enumerated efficient frontier and the solver's points over `--q-sweep`.
    #[arg(long)]
    pub frontier: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4,8,16")]
    pub q_sweep: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct DiversifyArgs {
    /// CSV similarity matrix with a header row.
    #[arg(long, conflicts_with = "synthetic")]
    pub similarity: Option<PathBuf>,
    /// Generate a seeded similarity matrix of this size (default 3 without `--similarity`).
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Number of representatives.
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long, value_enum, default_value_t = Solver::BruteForce)]
    pub solver: Solver,
    #[command(flatten)]
    pub variational: VariationalArgs,
}

#[derive(Debug, Args)]
pub struct AuctionArgs {
    /// CSV with `price,qty_item_1,…` rows and one `units,…` row.
    #[arg(long, conflicts_with = "random")]
    pub instance: Option<PathBuf>,
    /// Generate a seeded instance with this many bids (default 16 without `--instance`).
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub items: usize,
    /// Units available of every item in a generated instance.
    #[arg(long, default_value_t = 6.0)]
    pub units: f64,
    /// Largest quantity a generated bid asks for.
    #[arg(long, default_value_t = 6)]
    pub max_qty: u32,
    /// `admm` or `brute-force` (exhaustive enumeration of bids).
    #[arg(long, value_enum, default_value_t = Solver::Admm)]
    pub solver: Solver,
    /// Solver for the binary block inside ADMM.
    #[arg(long, value_enum, default_value_t = QuboSolverArg::BruteForce)]
    pub qubo_solver: QuboSolverArg,
    #[arg(long, default_value_t = 12.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 11.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    /// Merit weight (default ten times the largest price).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[command(flatten)]
    pub variational: VariationalArgs,
}

#[derive(Debug, Subcommand)]
pub enum MlCommand {
    /// Generate a seeded dataset.
    Synth(SynthArgs),
    /// Train a classifier, optionally with cross-validation.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    /// `time,amount,method,zip,mcc,label` with a planted fraud rule.
    Transactions,
    /// Points labelled by a random classifier of the same architecture.
    SelfLabeled,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = DatasetKind::Transactions)]
    pub kind: DatasetKind,
    /// Feature count of self-labelled data.
    #[arg(long, default_value_t = 2)]
    pub features: usize,
    /// Minimum `|f|` of kept self-labelled points.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoder {
    /// Every column through the feature map.
    Plain,
    /// Categorical columns in `--qrac-features` packed onto QRAC qubits.
    Qrac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RiskArg {
    CrossEntropy,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    MinMax,
    Identity,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Encoder::Plain)]
    pub encoder: Encoder,
    #[arg(long, value_delimiter = ',', default_value = "method")]
    pub qrac_features: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub latent: usize,
    /// Entangling rounds of the separator.
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Feature map repetitions.
    #[arg(long, default_value_t = 2)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = RiskArg::CrossEntropy)]
    pub risk: RiskArg,
    #[arg(long, value_enum, default_value_t = ScalingArg::MinMax)]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Run stratified k-fold cross-validation against the linear baselines.
    #[arg(long)]
    pub cv: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AeCommand {
    /// Coverage of the AE error bound over a grid of amplitudes, plus the QPE failure table.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Amplitudes as `start:stop:step` or a comma list.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub grid: String,
    /// Largest accuracy `s` (bits) and extra qubits `p` in the failure table.
    #[arg(long, default_value_t = 6)]
    pub s_max: u32,
    #[arg(long, default_value_t = 6)]
    pub p_max: u32,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
