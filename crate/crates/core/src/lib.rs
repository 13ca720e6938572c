//! Momentum quantum natural gradient (Momentum-QNG) for variational quantum
//! circuits, simulated exactly on dense statevectors.
//!
//! The crate is layered bottom-up:
//!
//! - [`sim`]: statevectors, gates and diagonal Z-type Hamiltonians.
//! - [`circuits`]: the RY/CNOT VQE ansatz, QAOA circuits and exact state
//!   jacobians.
//! - [`metric`]: the quantum geometric tensor, Fubini-Study metric and the
//!   regularized natural-gradient solve.
//! - [`optimizers`]: Momentum, QNG, Momentum-QNG and Adam, plus the maps
//!   between Langevin friction/time-step and (ρ, η).
//! - [`problems`]: portfolio Ising and Minimum Vertex Cover instances with
//!   exact ground-state oracles.
//! - [`harness`]: seeded trials, learning-rate sweeps, aggregates and CCDFs.
//! - [`report`] and [`cli`]: CSV/JSON output and the `mqng` command line.

pub mod circuits;
pub mod cli;
mod error;
pub mod harness;
pub mod metric;
pub mod optimizers;
pub mod problems;
pub mod report;
pub mod sim;

pub use error::{Error, Result};

pub use circuits::{build_qaoa_circuit, build_vqe_ansatz, Circuit, StateJacobian};
pub use harness::{
    ccdf, check_convergence, run_sweep, run_trial, BenchmarkReport, ConvergenceSpec, SweepConfig,
    TrialRecord,
};
pub use metric::{natural_direction, MetricTensor};
pub use optimizers::{
    hyperparams_to_langevin, langevin_to_hyperparams, LangevinParams, Optimizer, OptimizerConfig,
    OptimizerKind, OptimizerState,
};
pub use problems::{build_mvc, build_portfolio, exact_solve, quality_ratio, Graph, ProblemInstance};
pub use sim::{Gate, GateKind, PauliHamiltonian, PauliTerm, Statevector};
