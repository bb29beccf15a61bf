use std::path::PathBuf;
use std::process::ExitCode;

use bnscore::{execute, max_states_from_env, CliError, Command, Model, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bnscore", version, about = "Bayesian-network scoring and structure search")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Discrete,
    Gaussian,
}

#[derive(Subcommand)]
enum Cmd {
    /// Log marginal likelihood of a DAG.
    Score {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        dag: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Hill-climbing structure search.
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        /// Per-arc log prior (<= 0); 0 means a uniform structure prior.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        alpha_arc: f64,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        max_parents: usize,
        /// Also write the score trace here as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Independence equivalence of two DAGs.
    Equiv {
        #[arg(long)]
        dag1: PathBuf,
        #[arg(long)]
        dag2: PathBuf,
    },
    /// Scoring prior from a prior network.
    PriorBuild {
        #[arg(long)]
        network: PathBuf,
        /// Equivalent sample size (discrete networks).
        #[arg(long)]
        ess: Option<f64>,
        /// Normal precision scale (Gaussian networks).
        #[arg(long = "amu")]
        a_mu: Option<f64>,
        /// Wishart degrees of freedom (Gaussian networks).
        #[arg(long = "aw")]
        a_w: Option<f64>,
    },
    /// Compare joint and factored prior densities at random parameters.
    CheckConsistency {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long)]
        seed: u64,
    },
}

impl From<Cmd> for Command {
    fn from(cmd: Cmd) -> Self {
        match cmd {
            Cmd::Score { data, dag, prior, model } => Command::Score {
                data,
                dag,
                prior,
                model: model.map(|m| match m {
                    ModelArg::Discrete => Model::Discrete,
                    ModelArg::Gaussian => Model::Gaussian,
                }),
            },
            Cmd::Learn { data, prior, alpha_arc, restarts, seed, max_parents, trace } => {
                Command::Learn { data, prior, alpha_arc, restarts, seed, max_parents, trace }
            }
            Cmd::Equiv { dag1, dag2 } => Command::Equiv { dag1, dag2 },
            Cmd::PriorBuild { network, ess, a_mu, a_w } => Command::PriorBuild { network, ess, a_mu, a_w },
            Cmd::CheckConsistency { prior, points, seed } => Command::CheckConsistency { prior, points, seed },
        }
    }
}

fn fail(e: &CliError, code: u8) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Config(e.render().to_string().trim().to_string()), 2),
    };
    let max_states = match max_states_from_env() {
        Ok(n) => n,
        Err(e) => return fail(&e, 2),
    };
    let cfg = RunConfig { command: cli.command.into(), out: cli.out, max_states };
    let code = execute(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
