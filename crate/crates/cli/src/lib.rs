//! Command-line front end for `newton-flow`.
//!
//! Subcommands read a JSON scene (see [`scene::SceneConfig`]), run one of the
//! library drivers and emit sorted-key JSON or CSV. Failures map onto exit
//! codes: 2 parse, 3 domain, 4 numerical, 5 verification.

pub mod commands;
pub mod json;
pub mod scene;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] newton_flow::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use newton_flow::Error as E;
        match self {
            Self::Parse(_) => 2,
            Self::Core(
                E::CflViolation { .. }
                | E::Extinct { .. }
                | E::Pinch { .. }
                | E::Numerical { .. }
                | E::DegenerateEdge { .. },
            )
            | Self::Numerical(_) => 4,
            Self::Core(_) => 3,
            Self::Verification(_) => 5,
            Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "newton-flow", version, about = "Curvature algebra, shrinker checks and r-mean curvature flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for randomized sampling. Reserved: no subcommand samples randomly.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// σ's, Newton eigenvalues and the modified norm for one curvature vector.
    Algebra(AlgebraArgs),
    /// Sup of |σ_r + ⟨X,N⟩| over the sampled scene model.
    Residual(SceneArgs),
    /// Gap-theorem hypotheses and classification as JSON.
    Gap(SceneArgs),
    /// Run the flow; CSV diagnostics plus a JSON summary.
    Flow(FlowArgs),
    /// Identity convergence and shrinker suites as a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct AlgebraArgs {
    /// Principal curvatures, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "preset")]
    pub k: Option<Vec<f64>>,
    #[arg(long)]
    pub r: Option<usize>,
    /// `cyl:n=N,m=M,r=R`, `sphere:n=N,r=R` or `plane:n=N`; shrinker radii.
    #[arg(long)]
    pub preset: Option<String>,
    /// Take the curvatures at the first sample of a scene model.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["k", "preset"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Summary JSON destination.
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run the built-in suites (default when no --config is given).
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
    pub resolutions: Vec<usize>,
    /// Also verify the identities on this scene's model.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Run one parsed command. Primary output goes to `stdout` unless an output
/// path is configured.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} accepted; no subcommand uses randomness");
    }
    match &cli.command {
        Command::Algebra(args) => commands::cmd_algebra(args, stdout),
        Command::Residual(args) => commands::cmd_residual(args, stdout),
        Command::Gap(args) => commands::cmd_gap(args, stdout),
        Command::Flow(args) => commands::cmd_flow(args, stdout),
        Command::Verify(args) => commands::cmd_verify(args, stdout),
    }
}

/// Configure logging from `NEWTON_FLOW_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("NEWTON_FLOW_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
