//! Benchmark instances: portfolio Ising (VQE) and Minimum Vertex Cover
//! (QAOA), with exact ground-state data from full enumeration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{build_qaoa_circuit, build_vqe_ansatz, Circuit};
use crate::sim::{PauliHamiltonian, Statevector, MAX_QUBITS};
use crate::{Error, Result};

/// Basis states whose energy is within this of the minimum count as ground
/// states.
pub const GROUND_TOL: f64 = 1e-9;

pub const DEFAULT_PENALTY: f64 = 2.0;
pub const DEFAULT_VQE_LAYERS: usize = 3;
pub const DEFAULT_ER_EDGE_PROBABILITY: f64 = 0.5;

/// Fixed 4-vertex benchmark graph.
pub const DEFAULT_MVC4_EDGES: [(usize, usize); 4] = [(0, 1), (1, 2), (0, 2), (2, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    PortfolioVqe,
    MvcQaoa,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::PortfolioVqe => "portfolio",
            ProblemKind::MvcQaoa => "mvc",
        })
    }
}

/// Undirected simple graph on vertices `0..n_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects self-loops, out-of-range vertices and duplicate edges.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop on vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Graph(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Self { n_vertices, edges })
    }

    /// Edge list with vertex count = largest index + 1.
    pub fn from_edges(edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(n, edges)
    }

    /// Reads the edge-list format read from a file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    /// Erdős–Rényi G(n, p), redrawn from the same stream until connected.
    pub fn erdos_renyi_connected(n: usize, p: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph(format!("need at least 2 vertices, got {n}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Graph(format!("edge probability {p} outside (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            let g = Self::new(n, edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whether the vertex set encoded by `bits` (bit i = vertex i) covers
    /// every edge.
    pub fn is_cover(&self, bits: usize) -> bool {
        self.edges
            .iter()
            .all(|&(u, v)| bits >> u & 1 == 1 || bits >> v & 1 == 1)
    }
}

/// One "u v" pair per line, 0-based; blank lines and `#` comments ignored.
impl FromStr for Graph {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<_> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::Graph(format!("line {}: bad vertex index '{s}'", lineno + 1))
                })
            };
            match fields.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::Graph(format!(
                        "line {}: expected 'u v', got '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        if edges.is_empty() {
            return Err(Error::Graph("edge list is empty".into()));
        }
        Self::from_edges(edges)
    }
}

/// Classical data the instance was built from, kept for the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub seed: Option<u64>,
    /// Dense upper-triangular couplings (i, j, J_ij), i < j.
    pub couplings: Option<Vec<(usize, usize, f64)>>,
    pub fields: Option<Vec<f64>>,
    pub graph: Option<Graph>,
    pub penalty: Option<f64>,
    pub n_layers: usize,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub hamiltonian: PauliHamiltonian,
    pub circuit: Circuit,
    pub ground_energy: f64,
    /// Sorted basis indices attaining `ground_energy`.
    pub solution_states: Vec<usize>,
    pub metadata: InstanceMetadata,
    diagonal: Vec<f64>,
}

impl ProblemInstance {
    fn new(
        kind: ProblemKind,
        hamiltonian: PauliHamiltonian,
        circuit: Circuit,
        metadata: InstanceMetadata,
    ) -> Result<Self> {
        let (ground_energy, solution_states) = exact_solve(&hamiltonian, hamiltonian.n_qubits)?;
        let diagonal = hamiltonian.diagonal();
        Ok(Self {
            kind,
            hamiltonian,
            circuit,
            ground_energy,
            solution_states,
            metadata,
            diagonal,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    /// ⟨i|H|i⟩ for every basis state.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn energy(&self, state: &Statevector) -> f64 {
        state
            .amplitudes()
            .iter()
            .zip(&self.diagonal)
            .map(|(a, h)| a.norm_sqr() * h)
            .sum()
    }
}

/// Random dense Ising spin glass H = Σ_{i<j} J_ij Z_i Z_j + Σ_i h_i Z_i with
/// J, h ~ U[−1, 1], couplings drawn first in (i, j) lexicographic order.
pub fn build_portfolio(n_qubits: usize, seed: u64, n_layers: usize) -> Result<ProblemInstance> {
    check_portfolio_size(n_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let couplings: Vec<_> = (0..n_qubits)
        .flat_map(|i| (i + 1..n_qubits).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, rng.random_range(-1.0..=1.0)))
        .collect();
    let fields: Vec<f64> = (0..n_qubits).map(|_| rng.random_range(-1.0..=1.0)).collect();
    build_portfolio_from_coefficients(n_qubits, &couplings, &fields, n_layers, Some(seed))
}

/// Portfolio instance with explicit couplings (i, j, J_ij) and fields h_i.
pub fn build_portfolio_from_coefficients(
    n_qubits: usize,
    couplings: &[(usize, usize, f64)],
    fields: &[f64],
    n_layers: usize,
    seed: Option<u64>,
) -> Result<ProblemInstance> {
    check_portfolio_size(n_qubits)?;
    if fields.len() != n_qubits {
        return Err(Error::Size(format!(
            "{} fields for {n_qubits} qubits",
            fields.len()
        )));
    }
    let mut h = PauliHamiltonian::new(n_qubits, 0.0)?;
    for &(i, j, c) in couplings {
        h.add_term(c, &[i, j])?;
    }
    for (i, &c) in fields.iter().enumerate() {
        h.add_term(c, &[i])?;
    }
    let circuit = build_vqe_ansatz(n_qubits, n_layers)?;
    let metadata = InstanceMetadata {
        seed,
        couplings: Some(couplings.to_vec()),
        fields: Some(fields.to_vec()),
        graph: None,
        penalty: None,
        n_layers,
        note: "dense Ising couplings and fields drawn uniformly from [-1, 1]".into(),
    };
    ProblemInstance::new(ProblemKind::PortfolioVqe, h, circuit, metadata)
}

fn check_portfolio_size(n_qubits: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::Size(format!(
            "portfolio size {n_qubits} outside 2..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Z-basis Hamiltonian of the penalized vertex-cover cost
/// C(x) = Σ_i x_i + P·Σ_{(u,v)∈E} (1 − x_u)(1 − x_v), with x_i = (1 − z_i)/2
/// (bit i set ⇔ vertex i in the cover).
pub fn mvc_hamiltonian(graph: &Graph, penalty: f64) -> Result<PauliHamiltonian> {
    let n = graph.n_vertices;
    let m = graph.edges.len() as f64;
    // Σ x_i = n/2 − ½ Σ z_i;  (1−x_u)(1−x_v) = (1 + z_u + z_v + z_u z_v)/4
    let mut h = PauliHamiltonian::new(n, n as f64 / 2.0 + penalty * m / 4.0)?;
    let mut linear = vec![-0.5; n];
    for &(u, v) in &graph.edges {
        linear[u] += penalty / 4.0;
        linear[v] += penalty / 4.0;
    }
    for (q, &c) in linear.iter().enumerate() {
        if c != 0.0 {
            h.add_term(c, &[q])?;
        }
    }
    for &(u, v) in &graph.edges {
        h.add_term(penalty / 4.0, &[u, v])?;
    }
    Ok(h)
}

/// QAOA Minimum Vertex Cover instance. The graph must be connected and the
/// penalty strictly greater than 1.
pub fn build_mvc(graph: &Graph, n_layers: usize, penalty: f64) -> Result<ProblemInstance> {
    if !(penalty > 1.0 && penalty.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "penalty must be > 1, got {penalty}"
        )));
    }
    if graph.n_vertices > MAX_QUBITS {
        return Err(Error::Size(format!(
            "{} vertices exceed {MAX_QUBITS} qubits",
            graph.n_vertices
        )));
    }
    if graph.n_vertices < 2 || !graph.is_connected() {
        return Err(Error::Graph("MVC graph must be connected with >= 2 vertices".into()));
    }
    let h = mvc_hamiltonian(graph, penalty)?;
    let circuit = build_qaoa_circuit(&graph.edges, n_layers, &h)?;
    let metadata = InstanceMetadata {
        seed: None,
        couplings: None,
        fields: None,
        graph: Some(graph.clone()),
        penalty: Some(penalty),
        n_layers,
        note: "penalized vertex-cover cost; bit i set means vertex i in the cover".into(),
    };
    ProblemInstance::new(ProblemKind::MvcQaoa, h, circuit, metadata)
}

/// Minimum diagonal entry and every basis index within [`GROUND_TOL`] of it.
pub fn exact_solve(h: &PauliHamiltonian, n_qubits: usize) -> Result<(f64, Vec<usize>)> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!(
            "{n_qubits} qubits exceed the enumeration limit {MAX_QUBITS}"
        )));
    }
    if h.n_qubits != n_qubits {
        return Err(Error::Size(format!(
            "Hamiltonian on {} qubits, asked for {n_qubits}",
            h.n_qubits
        )));
    }
    let diag = h.diagonal();
    let ground = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let states = diag
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - ground <= GROUND_TOL)
        .map(|(i, _)| i)
        .collect();
    Ok((ground, states))
}

/// Total probability on the exact solution states.
pub fn quality_ratio(state: &Statevector, solution_states: &[usize]) -> Result<f64> {
    let amps = state.amplitudes();
    if let Some(&bad) = solution_states.iter().find(|&&i| i >= amps.len()) {
        return Err(Error::Index(format!(
            "solution index {bad} out of range for dimension {}",
            amps.len()
        )));
    }
    let q: f64 = solution_states.iter().map(|&i| amps[i].norm_sqr()).sum();
    Ok(q.clamp(0.0, 1.0))
}
