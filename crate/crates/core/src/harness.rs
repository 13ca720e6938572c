//! Seeded trials, learning-rate sweeps and their aggregates.
//!
//! Every trial seed fixes one initial parameter vector θ₀ ~ U[0, 2π)^d,
//! shared by all optimizers and all step sizes; Δθ₀ = 0.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::RunSpec;
use crate::metric::MetricTensor;
use crate::optimizers::{Optimizer, OptimizerConfig, OptimizerKind};
use crate::problems::{quality_ratio, InstanceMetadata, ProblemInstance, ProblemKind};
use crate::sim::PauliHamiltonian;
use crate::{Error, Result};

/// Default step-size grid.
pub const DEFAULT_ETA_GRID: [f64; 11] = [
    0.01, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.225, 0.25,
];
pub const DEFAULT_TRIALS: usize = 200;

/// Converged once the last `patience` successive energy differences are all
/// below 10^(−digits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub digits: u32,
    pub patience: usize,
}

impl ConvergenceSpec {
    pub const PORTFOLIO: ConvergenceSpec = ConvergenceSpec {
        digits: 3,
        patience: 1,
    };

    pub fn new(digits: u32, patience: usize) -> Result<Self> {
        if digits == 0 || patience == 0 {
            return Err(Error::InvalidArgument(format!(
                "convergence needs digits >= 1 and patience >= 1, got {digits}/{patience}"
            )));
        }
        Ok(Self { digits, patience })
    }

    pub fn threshold(&self) -> f64 {
        10f64.powi(-(self.digits as i32))
    }
}

pub fn check_convergence(trace: &[f64], digits: u32, patience: usize) -> bool {
    if patience == 0 || trace.len() < patience + 1 {
        return false;
    }
    let tol = 10f64.powi(-(digits as i32));
    trace[trace.len() - patience - 1..]
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() < tol)
}

/// θ₀ for a trial seed.
pub fn initial_params(seed: u64, n_params: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_params).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Short hex digest of a parameter vector's exact bits.
pub fn params_digest(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub seed: u64,
    pub init_digest: String,
    pub steps_taken: usize,
    pub converged: bool,
    pub diverged: bool,
    pub final_energy: f64,
    pub delta_e: f64,
    pub quality: Option<f64>,
    pub energy_trace: Vec<f64>,
}

/// Runs one trial from the seeded θ₀.
pub fn run_trial(
    instance: &ProblemInstance,
    cfg: &OptimizerConfig,
    max_steps: usize,
    conv: ConvergenceSpec,
    seed: u64,
) -> Result<TrialRecord> {
    let theta0 = initial_params(seed, instance.n_params());
    run_trial_from(instance, cfg, max_steps, conv, seed, &theta0)
}

/// Runs one trial from an explicit θ₀.
///
/// Each step: gradient (and metric for QNG kinds) at θ_n, displacement from
/// the optimizer, θ_{n+1} = θ_n + Δθ_{n+1}, energy at θ_{n+1}. A failed
/// solve or a non-finite parameter/energy marks the trial diverged; it then
/// reports `max_steps` steps and the last finite energy.
pub fn run_trial_from(
    instance: &ProblemInstance,
    cfg: &OptimizerConfig,
    max_steps: usize,
    conv: ConvergenceSpec,
    seed: u64,
    theta0: &[f64],
) -> Result<TrialRecord> {
    let circuit = &instance.circuit;
    if theta0.len() != circuit.n_params() {
        return Err(Error::Size(format!(
            "θ₀ of length {} for {} parameters",
            theta0.len(),
            circuit.n_params()
        )));
    }
    let mut optimizer = Optimizer::new(*cfg, circuit.n_params())?;
    let mut theta = theta0.to_vec();
    let mut state = circuit.evaluate(&theta)?;
    let mut trace = vec![instance.energy(&state)];
    let mut steps_taken = 0;
    let mut converged = false;
    let mut diverged = false;

    for step in 0..max_steps {
        match advance(instance, &mut optimizer, &theta) {
            Some((next_theta, next_state, energy)) => {
                theta = next_theta;
                state = next_state;
                trace.push(energy);
                steps_taken = step + 1;
                if check_convergence(&trace, conv.digits, conv.patience) {
                    converged = true;
                    break;
                }
            }
            None => {
                diverged = true;
                steps_taken = max_steps;
                break;
            }
        }
    }

    let final_energy = *trace.last().expect("trace holds E(θ₀)");
    let quality = match instance.kind {
        ProblemKind::MvcQaoa => Some(quality_ratio(&state, &instance.solution_states)?),
        ProblemKind::PortfolioVqe => None,
    };
    Ok(TrialRecord {
        optimizer: cfg.kind,
        eta: cfg.eta,
        seed,
        init_digest: params_digest(theta0),
        steps_taken,
        converged,
        diverged,
        final_energy,
        delta_e: final_energy - instance.ground_energy,
        quality,
        energy_trace: trace,
    })
}

/// One optimizer step; `None` on any numerical failure.
fn advance(
    instance: &ProblemInstance,
    optimizer: &mut Optimizer,
    theta: &[f64],
) -> Option<(Vec<f64>, crate::Statevector, f64)> {
    let circuit = &instance.circuit;
    let jac = circuit.jacobian(theta).ok()?;
    let grad = jac.energy_gradient(instance.diagonal());
    let metric = if optimizer.config.kind.uses_metric() {
        Some(
            MetricTensor::from_jacobian(&jac)
                .ok()?
                .with_lambda(optimizer.config.lambda),
        )
    } else {
        None
    };
    let delta = optimizer.step(&grad, metric.as_ref()).ok()?;
    let next: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + d).collect();
    if next.iter().any(|t| !t.is_finite()) {
        return None;
    }
    let state = circuit.evaluate(&next).ok()?;
    let energy = instance.energy(&state);
    energy.is_finite().then_some((next, state, energy))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eta_grid: Vec<f64>,
    pub n_trials: usize,
    pub max_steps: usize,
    pub convergence: ConvergenceSpec,
    pub optimizers: Vec<OptimizerKind>,
    pub base_seed: u64,
    /// ρ, λ and Adam settings shared by every optimizer; `kind` and `eta`
    /// are overridden per run.
    pub template: OptimizerConfig,
}

impl SweepConfig {
    pub fn new(max_steps: usize, convergence: ConvergenceSpec) -> Self {
        Self {
            eta_grid: DEFAULT_ETA_GRID.to_vec(),
            n_trials: DEFAULT_TRIALS,
            max_steps,
            convergence,
            optimizers: OptimizerKind::ALL.to_vec(),
            base_seed: 0,
            template: OptimizerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() {
            return Err(Error::InvalidArgument("empty eta grid".into()));
        }
        if self.eta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "eta grid must be strictly ascending".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        if self.optimizers.is_empty() {
            return Err(Error::InvalidArgument("no optimizers selected".into()));
        }
        ConvergenceSpec::new(self.convergence.digits, self.convergence.patience)?;
        for &eta in &self.eta_grid {
            self.config_for(OptimizerKind::MomentumQng, eta).validate()?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n_trials as u64).map(|k| self.base_seed + k)
    }

    pub fn config_for(&self, kind: OptimizerKind, eta: f64) -> OptimizerConfig {
        OptimizerConfig {
            kind,
            eta,
            ..self.template
        }
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub optimizer: OptimizerKind,
    pub eta: f64,
    pub n_trials: usize,
    pub delta_e: Stat,
    /// Diverged trials count at `max_steps`.
    pub steps: Stat,
    pub quality: Option<Stat>,
}

/// Conventions a reader needs to interpret or reproduce the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub qubit_order: String,
    pub metric: String,
    pub lambda: f64,
    pub stochastic_force: String,
    pub loss: String,
    pub initial_params: String,
    pub std: String,
    pub diverged_steps: String,
    pub rng: String,
}

impl Conventions {
    fn for_sweep(sweep: &SweepConfig) -> Self {
        Self {
            qubit_order: "qubit 0 is the least significant bit of a basis index".into(),
            metric: "full quantum geometric tensor (not block-diagonal), recomputed every step"
                .into(),
            lambda: sweep.template.lambda,
            stochastic_force: "zero (exact gradients)".into(),
            loss: "raw expectation <psi|H|psi> (no factor 1/2)".into(),
            initial_params: "uniform [0, 2pi) per trial seed, shared by all optimizers and etas"
                .into(),
            std: "population standard deviation".into(),
            diverged_steps: "diverged trials are censored at max_steps".into(),
            rng: "ChaCha8 seeded from u64".into(),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub problem: ProblemKind,
    pub n_qubits: usize,
    pub n_params: usize,
    pub instance: InstanceMetadata,
    pub hamiltonian: PauliHamiltonian,
    pub ground_energy: f64,
    pub solution_states: Vec<usize>,
    pub sweep: SweepConfig,
    pub trial_seeds: Vec<u64>,
    pub conventions: Conventions,
    pub run_spec: Option<RunSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub manifest: Manifest,
    pub aggregates: Vec<Aggregate>,
    pub records: Vec<TrialRecord>,
}

impl BenchmarkReport {
    /// SHA-256 over the aggregates and records.
    pub fn digest(&self) -> String {
        let body = serde_json::to_vec(&(&self.aggregates, &self.records))
            .expect("report serializes");
        hex::encode(Sha256::digest(&body))
    }

    pub fn aggregate(&self, optimizer: OptimizerKind, eta: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.optimizer == optimizer && a.eta == eta)
    }

    pub fn records_for(
        &self,
        optimizer: OptimizerKind,
        eta: f64,
    ) -> impl Iterator<Item = &TrialRecord> + '_ {
        self.records
            .iter()
            .filter(move |r| r.optimizer == optimizer && r.eta == eta)
    }
}

/// Runs every (optimizer, η, seed) combination. Trials execute in parallel;
/// results are collected in (optimizer, η, seed) order, so the report is a
/// pure function of its inputs.
pub fn run_sweep(instance: &ProblemInstance, sweep: &SweepConfig) -> Result<BenchmarkReport> {
    sweep.validate()?;
    let seeds: Vec<u64> = sweep.seeds().collect();
    let inits: Vec<Vec<f64>> = seeds
        .iter()
        .map(|&s| initial_params(s, instance.n_params()))
        .collect();

    let n_seeds = seeds.len();
    let jobs: Vec<(OptimizerKind, f64, usize)> = sweep
        .optimizers
        .iter()
        .flat_map(|&k| {
            sweep
                .eta_grid
                .iter()
                .flat_map(move |&eta| (0..n_seeds).map(move |i| (k, eta, i)))
        })
        .collect();

    let records = jobs
        .par_iter()
        .map(|&(kind, eta, i)| {
            run_trial_from(
                instance,
                &sweep.config_for(kind, eta),
                sweep.max_steps,
                sweep.convergence,
                seeds[i],
                &inits[i],
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let aggregates = records
        .chunks(seeds.len())
        .map(aggregate)
        .collect();

    Ok(BenchmarkReport {
        manifest: Manifest {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            problem: instance.kind,
            n_qubits: instance.n_qubits(),
            n_params: instance.n_params(),
            instance: instance.metadata.clone(),
            hamiltonian: instance.hamiltonian.clone(),
            ground_energy: instance.ground_energy,
            solution_states: instance.solution_states.clone(),
            sweep: sweep.clone(),
            trial_seeds: seeds,
            conventions: Conventions::for_sweep(sweep),
            run_spec: None,
        },
        aggregates,
        records,
    })
}

fn aggregate(chunk: &[TrialRecord]) -> Aggregate {
    let delta_e: Vec<f64> = chunk.iter().map(|r| r.delta_e).collect();
    let steps: Vec<f64> = chunk.iter().map(|r| r.steps_taken as f64).collect();
    let quality: Vec<f64> = chunk.iter().filter_map(|r| r.quality).collect();
    Aggregate {
        optimizer: chunk[0].optimizer,
        eta: chunk[0].eta,
        n_trials: chunk.len(),
        delta_e: Stat::of(&delta_e).expect("non-empty chunk"),
        steps: Stat::of(&steps).expect("non-empty chunk"),
        quality: Stat::of(&quality),
    }
}

/// Complementary CDF: for each distinct sample value v (ascending), the
/// fraction of samples ≥ v.
pub fn ccdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Size("CCDF of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        out.push((v, (sorted.len() - i) as f64 / n));
        while i < sorted.len() && sorted[i].total_cmp(&v).is_eq() {
            i += 1;
        }
    }
    Ok(out)
}
