//! `mqng` command line: argument parsing, validation and run orchestration.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::harness::{run_sweep, BenchmarkReport, ConvergenceSpec, SweepConfig, DEFAULT_ETA_GRID};
use crate::metric::DEFAULT_LAMBDA;
use crate::optimizers::{OptimizerConfig, OptimizerKind, DEFAULT_RHO};
use crate::problems::{
    build_mvc, build_portfolio, Graph, ProblemInstance, DEFAULT_ER_EDGE_PROBABILITY,
    DEFAULT_MVC4_EDGES, DEFAULT_PENALTY, DEFAULT_VQE_LAYERS,
};
use crate::report::{read_manifest, write_results};
use crate::sim::MAX_QUBITS;
use crate::Error;

pub const OUT_DIR_ENV: &str = "MQNG_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "mqng-results";

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemArg {
    Portfolio,
    Mvc,
}

#[derive(Debug, Parser)]
#[command(name = "mqng", version, about = "Momentum-QNG benchmark sweeps on an exact statevector simulator")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Run a learning-rate sweep and write CSV/JSON results.
    Run(RunArgs),
    /// Re-run the sweep recorded in a manifest.json.
    Replay {
        manifest: PathBuf,
        /// Output directory (defaults to the one recorded in the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Number of qubits / graph vertices [portfolio: 6, mvc: 4].
    #[arg(long)]
    qubits: Option<usize>,
    /// Circuit layers [portfolio: 3; mvc: 4 for N <= 4, else 6].
    #[arg(long)]
    layers: Option<usize>,
    /// Comma-separated subset of qng,adam,momentum-qng,momentum [all].
    #[arg(long, value_delimiter = ',')]
    optimizers: Option<Vec<OptimizerKind>>,
    /// Step size(s) η, comma-separated [0.01..0.25 grid].
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Momentum coefficient ρ for Momentum and Momentum-QNG.
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    /// Tikhonov shift added to the metric before solving.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = crate::harness::DEFAULT_TRIALS)]
    trials: usize,
    /// [portfolio: 200; mvc: 200 for N <= 4, else 300]
    #[arg(long)]
    max_steps: Option<usize>,
    /// Energy-convergence digits k (threshold 10^-k) [portfolio: 3; mvc: 2 for N <= 4, else 3].
    #[arg(long)]
    conv_digits: Option<u32>,
    /// Consecutive sub-threshold differences required [portfolio: 1; mvc: 3].
    #[arg(long)]
    patience: Option<usize>,
    /// First trial seed; trials use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the portfolio couplings or the random MVC graph.
    #[arg(long, default_value_t = 17)]
    instance_seed: u64,
    /// Edge-list file for mvc ("u v" per line, 0-based, '#' comments).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Uncovered-edge penalty for mvc (> 1).
    #[arg(long, default_value_t = DEFAULT_PENALTY)]
    penalty: f64,
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out: PathBuf,
}

/// Fully defaulted and validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub problem: ProblemArg,
    pub n_qubits: usize,
    pub layers: usize,
    pub optimizers: Vec<OptimizerKind>,
    pub eta_grid: Vec<f64>,
    pub rho: f64,
    pub lambda: f64,
    pub trials: usize,
    pub max_steps: usize,
    pub conv_digits: u32,
    pub patience: usize,
    pub seed: u64,
    pub instance_seed: u64,
    pub penalty: f64,
    pub graph_path: Option<PathBuf>,
    /// MVC graph as used (loaded, fixed or generated).
    pub graph: Option<Graph>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run(RunSpec),
    Replay {
        manifest: PathBuf,
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Help/version output or a clap parse failure.
    Clap(clap::Error),
    Usage(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(Error::Io(_) | Error::Csv(_) | Error::Json(_)) => EXIT_IO,
            CliError::Run(Error::Numerical(_)) => EXIT_NUMERICAL,
            CliError::Run(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    match cli.command {
        CliCommand::Run(args) => Ok(Command::Run(RunSpec::from_args(args)?)),
        CliCommand::Replay { manifest, out } => Ok(Command::Replay { manifest, out }),
    }
}

impl RunSpec {
    fn from_args(a: RunArgs) -> Result<Self, CliError> {
        let usage = |m: String| CliError::Usage(m);

        let mut graph = None;
        let n_qubits = match a.problem {
            ProblemArg::Portfolio => {
                if a.graph.is_some() {
                    return Err(usage("--graph only applies to --problem mvc".into()));
                }
                a.qubits.unwrap_or(6)
            }
            ProblemArg::Mvc => match &a.graph {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::Run(e.into()))?;
                    let g: Graph = text
                        .parse()
                        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    if let Some(q) = a.qubits.filter(|&q| q != g.n_vertices) {
                        return Err(usage(format!(
                            "--qubits {q} disagrees with {} graph vertices",
                            g.n_vertices
                        )));
                    }
                    let n = g.n_vertices;
                    graph = Some(g);
                    n
                }
                None => a.qubits.unwrap_or(4),
            },
        };
        if !(2..=MAX_QUBITS).contains(&n_qubits) {
            return Err(usage(format!("--qubits must lie in 2..={MAX_QUBITS}")));
        }

        let small = n_qubits <= 4;
        let (layers, max_steps, conv_digits, patience) = match a.problem {
            ProblemArg::Portfolio => (DEFAULT_VQE_LAYERS, 200, 3, 1),
            ProblemArg::Mvc if small => (4, 200, 2, 3),
            ProblemArg::Mvc => (6, 300, 3, 3),
        };

        if a.problem == ProblemArg::Mvc && graph.is_none() {
            graph = Some(if n_qubits == 4 {
                Graph::from_edges(DEFAULT_MVC4_EDGES.to_vec()).map_err(CliError::Run)?
            } else {
                Graph::erdos_renyi_connected(n_qubits, DEFAULT_ER_EDGE_PROBABILITY, a.instance_seed)
                    .map_err(CliError::Run)?
            });
        }

        let mut eta_grid = a.eta.unwrap_or_else(|| DEFAULT_ETA_GRID.to_vec());
        if let Some(bad) = eta_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(usage(format!("--eta must be > 0, got {bad}")));
        }
        eta_grid.sort_by(f64::total_cmp);
        eta_grid.dedup();

        let mut optimizers = a.optimizers.unwrap_or_else(|| OptimizerKind::ALL.to_vec());
        optimizers.dedup();

        let spec = RunSpec {
            problem: a.problem,
            n_qubits,
            layers: a.layers.unwrap_or(layers),
            optimizers,
            eta_grid,
            rho: a.rho,
            lambda: a.lambda,
            trials: a.trials,
            max_steps: a.max_steps.unwrap_or(max_steps),
            conv_digits: a.conv_digits.unwrap_or(conv_digits),
            patience: a.patience.unwrap_or(patience),
            seed: a.seed,
            instance_seed: a.instance_seed,
            penalty: a.penalty,
            graph_path: a.graph,
            graph,
            out_dir: a.out,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.into()));
        if self.layers == 0 {
            return usage("--layers must be >= 1");
        }
        if self.trials == 0 {
            return usage("--trials must be >= 1");
        }
        if self.conv_digits == 0 || self.patience == 0 {
            return usage("--conv-digits and --patience must be >= 1");
        }
        if self.optimizers.is_empty() {
            return usage("--optimizers must name at least one optimizer");
        }
        if self.problem == ProblemArg::Mvc && (self.penalty.is_nan() || self.penalty <= 1.0) {
            return usage("--penalty must be > 1");
        }
        self.sweep_config()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn build_instance(&self) -> crate::Result<ProblemInstance> {
        match self.problem {
            ProblemArg::Portfolio => build_portfolio(self.n_qubits, self.instance_seed, self.layers),
            ProblemArg::Mvc => {
                let graph = self
                    .graph
                    .as_ref()
                    .ok_or_else(|| Error::Graph("MVC run without a graph".into()))?;
                build_mvc(graph, self.layers, self.penalty)
            }
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            eta_grid: self.eta_grid.clone(),
            n_trials: self.trials,
            max_steps: self.max_steps,
            convergence: ConvergenceSpec {
                digits: self.conv_digits,
                patience: self.patience,
            },
            optimizers: self.optimizers.clone(),
            base_seed: self.seed,
            template: OptimizerConfig::default()
                .with_rho(self.rho)
                .with_lambda(self.lambda),
        }
    }

    /// Builds the instance and runs the sweep; the manifest records `self`.
    pub fn execute(&self) -> crate::Result<BenchmarkReport> {
        let instance = self.build_instance()?;
        let mut report = run_sweep(&instance, &self.sweep_config())?;
        report.manifest.run_spec = Some(self.clone());
        Ok(report)
    }
}

/// Executes a parsed command, writing results. Returns the output directory.
pub fn run_command(cmd: Command) -> Result<PathBuf, CliError> {
    let spec = match cmd {
        Command::Run(spec) => spec,
        Command::Replay { manifest, out } => {
            let m = read_manifest(&manifest)?;
            let mut spec = m.run_spec.ok_or_else(|| {
                CliError::Usage(format!("{} has no run_spec", manifest.display()))
            })?;
            if let Some(out) = out {
                spec.out_dir = out;
            }
            spec.validate()?;
            spec
        }
    };
    let report = spec.execute()?;
    write_results(&report, &spec.out_dir)?;
    Ok(spec.out_dir)
}
