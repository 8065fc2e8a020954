use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "binseq",
    version,
    about = "Tests for serial dependence in binomial and binary time-series regressions",
    after_help = "Exit status: 0 success, 1 invalid input or usage, 2 numerical or convergence failure.\n\
                  Results go to standard output (or --out); diagnostics go to standard error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the independent logistic-binomial regression.
    FitGlm(FitGlmArgs),
    /// Fit a GLARMA alternative by maximum likelihood with omega held fixed.
    FitGlarma(FitGlarmaArgs),
    /// Score test against GLARMA or BARMA alternatives (fixed omega or supremum).
    ScoreTest(TestArgs),
    /// Box-Pierce-Ljung portmanteau test on Pearson residuals.
    Blp(BlpArgs),
    /// Likelihood-ratio test against a GLARMA alternative (fixed omega or supremum).
    Lrt(TestArgs),
    /// Wald test against a GLARMA alternative (fixed omega or supremum).
    Wald(TestArgs),
    /// Monte Carlo null distribution of a statistic under the GLM fit of the data.
    Simulate(SimulateArgs),
    /// Reproduce a published simulation table (T1, T2, T4, T5).
    Reproduce(ReproduceArgs),
}

/// Input file and column selection.
#[derive(Debug, Args, Clone, Default)]
pub struct DataArgs {
    /// Headed CSV with count and trial columns plus regressors.
    #[arg(value_name = "DATA")]
    pub data: Option<PathBuf>,

    /// Column holding the success counts [default: y].
    #[arg(long, value_name = "NAME")]
    pub y_col: Option<String>,

    /// Column holding the trial counts [default: m].
    #[arg(long, value_name = "NAME")]
    pub m_col: Option<String>,

    /// Regressor columns in order [default: every other column].
    #[arg(long, value_name = "A,B,..", value_delimiter = ',')]
    pub regressors: Option<Vec<String>>,

    /// Prepend a constant-one regressor named intercept.
    #[arg(long)]
    pub intercept: bool,
}

/// Lag sets and residual type of the alternative.
#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// Autoregressive lags, comma separated [default: none].
    #[arg(long, value_name = "LAGS")]
    pub phi_lags: Option<String>,

    /// Moving-average lags, comma separated [default: none].
    #[arg(long, value_name = "LAGS")]
    pub theta_lags: Option<String>,

    /// GLARMA residual scaling: identity, pearson or score [default: pearson].
    #[arg(long, value_name = "KIND")]
    pub residuals: Option<String>,
}

/// Nuisance parameter handling. Fixed values and grids are mutually exclusive.
#[derive(Debug, Args, Clone, Default)]
pub struct OmegaArgs {
    /// Fixed nuisance values, one per overlapping lag [default: 0 for each].
    #[arg(long, value_name = "W1,W2,..", allow_hyphen_values = true, conflicts_with_all = ["omega_grid", "sup"])]
    pub omega: Option<String>,

    /// Supremum over the grid lower:upper:step, swept on every overlapping lag.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub omega_grid: Option<String>,

    /// Supremum test over --omega-grid [default grid: -0.9:0.9:0.1].
    #[arg(long)]
    pub sup: bool,
}

/// Shared run options.
#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// TOML file with default values for any flag (kebab-case keys).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write JSON output here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Worker threads [default: available parallelism]; results do not depend on it.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitGlmArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct FitGlarmaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fixed nuisance values, one per overlapping lag [default: 0 for each].
    #[arg(long, value_name = "W1,W2,..", allow_hyphen_values = true)]
    pub omega: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Alternative family: glarma or barma (score-test only) [default: glarma].
    #[arg(long, value_name = "FAMILY")]
    pub family: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
    /// Wald covariance: observed (marginal inverse observed information) or null [default: observed].
    #[arg(long, value_name = "KIND")]
    pub wald_cov: Option<String>,
    /// Write the supremum profile (omega, statistic) as CSV.
    #[arg(long, value_name = "FILE")]
    pub profile_csv: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BlpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Largest autocorrelation lag [default: largest of --phi-lags/--theta-lags].
    #[arg(long, value_name = "L")]
    pub max_lag: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Score,
    Blp,
    Lrt,
    Wald,
}

impl TestKind {
    pub fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, true).ok()
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Statistic to calibrate: score, blp, lrt or wald [default: score].
    #[arg(long, value_name = "TEST")]
    pub test: Option<String>,
    /// Alternative family for the score test: glarma or barma [default: glarma].
    #[arg(long, value_name = "FAMILY")]
    pub family: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub omega: OmegaArgs,
    /// Largest lag for the portmanteau test [default: largest model lag].
    #[arg(long, value_name = "L")]
    pub max_lag: Option<usize>,
    /// Wald covariance: observed or null [default: observed].
    #[arg(long, value_name = "KIND")]
    pub wald_cov: Option<String>,
    /// Monte Carlo replications [default: 1000].
    #[arg(long, value_name = "R")]
    pub reps: Option<usize>,
    /// Master seed [default: 20200101].
    #[arg(long, value_name = "SEED", env = "BINSEQ_SEED")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Table to reproduce: T1, T2, T4 or T5.
    #[arg(long, value_name = "ID")]
    pub table: String,
    /// Replications; 0 keeps only deterministic rows [default: 10000 for T1, 1000 otherwise].
    #[arg(long, value_name = "R")]
    pub reps: Option<usize>,
    /// Master seed [default: 20200101].
    #[arg(long, value_name = "SEED", env = "BINSEQ_SEED")]
    pub seed: Option<u64>,
    /// Series for the observed-statistic rows of T2 and T5 (columns y, m and regressors).
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Prepend an intercept to the --data regressors.
    #[arg(long)]
    pub intercept: bool,
    #[command(flatten)]
    pub run: RunArgs,
}
