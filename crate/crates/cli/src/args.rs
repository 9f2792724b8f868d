use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "teamcomp", version, about = "Compensation in human-AI teams: exact games, team MDPs, audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random draw in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving manifest.json and the result files.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Rendering of the summary report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Vi,
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Plan {
    Uniform,
    Stratified,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form pipeline, published-table comparison and equilibria of a signaling game.
    ReproduceAppendix { game: PathBuf },
    /// Solve a team scenario and measure the resulting compensation.
    Mdp {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Vi)]
        algorithm: Algorithm,
        /// Q-learning episodes.
        #[arg(long, default_value_t = 200_000)]
        episodes: usize,
        /// Value-iteration tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Least-compensation policies for one or more value slacks.
    Minimal {
        scenario: PathBuf,
        /// Exact slacks such as `0`, `1/4` or `32/11`; comma separated or repeated.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        slack: Vec<String>,
    },
    /// Run the escalation loop for one or more adaptation rates.
    Escalate {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5", allow_hyphen_values = true)]
        eta: Vec<f64>,
        #[arg(long, default_value_t = 20.0)]
        b_max: f64,
        /// Maximum number of rounds.
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Shift of the human's own goal; defaults to the scenario's bias.
        #[arg(long, allow_hyphen_values = true)]
        goal_shift: Option<i64>,
    },
    /// Five-condition audit of a deployed policy.
    Audit(AuditArgs),
    /// Residual misalignment after learning the human's reward from noisy feedback.
    Infer {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,4")]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        kappa: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Plan::Uniform)]
        plan: Plan,
        #[arg(long, allow_hyphen_values = true)]
        goal_shift: Option<i64>,
    },
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub scenario: PathBuf,
    /// CSV with header `state,action`.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub w_g: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_h: f64,
    /// Attestation text; its presence sets the consent flag.
    #[arg(long)]
    pub attest: Option<String>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub floor: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub goal_shift: Option<i64>,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 20.0)]
    pub b_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub escalation_tol: f64,
}
