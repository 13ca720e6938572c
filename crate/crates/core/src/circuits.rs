//! Parameterized circuits, exact state jacobians and energy gradients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::sim::{self, Angle, Gate, PauliHamiltonian, Statevector};
use crate::{Error, Result};

/// An ordered gate list acting on |0…0⟩, with `n_params` shared real
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
    /// For each parameter: (gate position, coefficient) of every use.
    param_usage: Vec<Vec<(usize, f64)>>,
}

impl Circuit {
    /// Validates every gate and requires each parameter to be used at least
    /// once.
    pub fn new(n_qubits: usize, gates: Vec<Gate>, n_params: usize) -> Result<Self> {
        Statevector::zero(n_qubits)?;
        let mut param_usage = vec![Vec::new(); n_params];
        for (pos, gate) in gates.iter().enumerate() {
            gate.validate(n_qubits, n_params)?;
            if let Some((index, coefficient)) = gate.param_source() {
                param_usage[index].push((pos, coefficient));
            }
        }
        if let Some(unused) = param_usage.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "parameter {unused} is not used by any gate"
            )));
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params,
            param_usage,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_usage(&self, index: usize) -> &[(usize, f64)] {
        &self.param_usage[index]
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Size(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }

    /// ψ_θ = U_θ|0…0⟩.
    pub fn evaluate(&self, params: &[f64]) -> Result<Statevector> {
        self.check_params(params)?;
        let mut amps = Statevector::zero(self.n_qubits)?.into_amplitudes();
        for gate in &self.gates {
            sim::apply_unchecked(&mut amps, gate, params);
        }
        Statevector::from_amplitudes(amps)
    }

    /// ψ_θ together with every ∂ψ/∂θᵢ.
    ///
    /// A single forward sweep: each column is started at the first gate that
    /// uses its parameter and from then on transported through the remaining
    /// gates alongside ψ. A rotation exp(−iαP/2) with α = c·θᵢ contributes
    /// c·(−i/2)·P·ψ at its output, which is added into column i; by linearity
    /// this sums the derivatives over every shared occurrence.
    pub fn jacobian(&self, params: &[f64]) -> Result<StateJacobian> {
        self.check_params(params)?;
        let mut psi = Statevector::zero(self.n_qubits)?.into_amplitudes();
        let dim = psi.len();
        let mut columns: Vec<Option<Vec<Complex64>>> = vec![None; self.n_params];
        let mut scratch = vec![Complex64::new(0.0, 0.0); dim];

        for gate in &self.gates {
            sim::apply_unchecked(&mut psi, gate, params);
            for col in columns.iter_mut().flatten() {
                sim::apply_unchecked(col, gate, params);
            }
            if let Some((index, coefficient)) = gate.param_source() {
                scratch.copy_from_slice(&psi);
                sim::apply_generator(&mut scratch, gate);
                let factor = Complex64::new(0.0, -0.5 * coefficient);
                let col = columns[index].get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim]);
                for (c, s) in col.iter_mut().zip(&scratch) {
                    *c += factor * s;
                }
            }
        }

        let columns = columns
            .into_iter()
            .map(|c| c.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); dim]))
            .collect();
        Ok(StateJacobian {
            base_state: Statevector::from_amplitudes(psi)?,
            columns,
        })
    }

    /// ∇⟨ψ_θ, Hψ_θ⟩.
    pub fn energy_gradient(&self, params: &[f64], h: &PauliHamiltonian) -> Result<Vec<f64>> {
        if h.n_qubits != self.n_qubits {
            return Err(Error::Size(format!(
                "Hamiltonian on {} qubits, circuit on {}",
                h.n_qubits, self.n_qubits
            )));
        }
        Ok(self.jacobian(params)?.energy_gradient(&h.diagonal()))
    }
}

/// ψ_θ and its partial derivatives ∂ψ/∂θᵢ (one column per parameter).
#[derive(Debug, Clone)]
pub struct StateJacobian {
    pub base_state: Statevector,
    pub columns: Vec<Vec<Complex64>>,
}

impl StateJacobian {
    pub fn n_params(&self) -> usize {
        self.columns.len()
    }

    /// 2·Re⟨∂ᵢψ, Hψ⟩ for a Hamiltonian given by its diagonal.
    pub fn energy_gradient(&self, diagonal: &[f64]) -> Vec<f64> {
        let psi = self.base_state.amplitudes();
        self.columns
            .iter()
            .map(|col| {
                2.0 * col
                    .iter()
                    .zip(psi)
                    .zip(diagonal)
                    .map(|((d, p), h)| (d.conj() * p).re * h)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Multiplies ψ and every column by the same unit phase.
    pub fn with_global_phase(&self, alpha: f64) -> Result<Self> {
        let phase = Complex64::from_polar(1.0, alpha);
        let base: Vec<_> = self.base_state.amplitudes().iter().map(|a| a * phase).collect();
        Ok(Self {
            base_state: Statevector::from_amplitudes(base)?,
            columns: self
                .columns
                .iter()
                .map(|c| c.iter().map(|a| a * phase).collect())
                .collect(),
        })
    }
}

/// Hardware-efficient ansatz: `n_layers` × (RY on every qubit, then a CNOT
/// ring i → i+1 mod n), followed by a final RY layer. Parameters are ordered
/// layer-major, qubit-minor; there are `n_qubits · (n_layers + 1)` of them.
pub fn build_vqe_ansatz(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "VQE ansatz needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_layers < 1 {
        return Err(Error::InvalidArgument("VQE ansatz needs at least 1 layer".into()));
    }
    let mut gates = Vec::new();
    let mut next = 0;
    let mut ry_layer = |gates: &mut Vec<Gate>| {
        for q in 0..n_qubits {
            gates.push(Gate::ry(q, Angle::param(next, 1.0)));
            next += 1;
        }
    };
    for _ in 0..n_layers {
        ry_layer(&mut gates);
        for q in 0..n_qubits {
            gates.push(Gate::cnot(q, (q + 1) % n_qubits));
        }
    }
    ry_layer(&mut gates);
    Circuit::new(n_qubits, gates, n_qubits * (n_layers + 1))
}

/// QAOA circuit for a diagonal cost Hamiltonian.
///
/// H on every qubit, then per layer l: exp(−iγ_l H_C) as one Z-rotation per
/// cost term with angle 2·γ_l·coefficient, followed by RX(2β_l) on every
/// qubit. Parameters are interleaved (γ₁, β₁, γ₂, β₂, …). The constant part
/// of H_C is a global phase and is dropped.
pub fn build_qaoa_circuit(
    edges: &[(usize, usize)],
    n_layers: usize,
    cost: &PauliHamiltonian,
) -> Result<Circuit> {
    let n = cost.n_qubits;
    if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n || u == v) {
        return Err(Error::Graph(format!(
            "edge ({u}, {v}) invalid for {n} vertices"
        )));
    }
    if n_layers < 1 {
        return Err(Error::InvalidArgument("QAOA needs at least 1 layer".into()));
    }
    let mut gates: Vec<Gate> = (0..n).map(Gate::h).collect();
    for layer in 0..n_layers {
        let (gamma, beta) = (2 * layer, 2 * layer + 1);
        for term in &cost.terms {
            let angle = Angle::param(gamma, 2.0 * term.coefficient);
            gates.push(match term.support.as_slice() {
                &[q] => Gate::rz(q, angle),
                &[a, b] => Gate::rzz(a, b, angle),
                support => Gate::pauli_rotation(support.to_vec(), angle),
            });
        }
        for q in 0..n {
            gates.push(Gate::rx(q, Angle::param(beta, 2.0)));
        }
    }
    Circuit::new(n, gates, 2 * n_layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::GateKind;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn single_ry() -> Circuit {
        Circuit::new(1, vec![Gate::ry(0, Angle::param(0, 1.0))], 1).unwrap()
    }

    fn z_sum(n: usize) -> PauliHamiltonian {
        let mut h = PauliHamiltonian::new(n, 0.0).unwrap();
        for q in 0..n {
            h.add_term(1.0, &[q]).unwrap();
        }
        h
    }

    fn edge_cost(n: usize, edges: &[(usize, usize)]) -> PauliHamiltonian {
        let mut h = PauliHamiltonian::new(n, 0.3).unwrap();
        for (k, &(u, v)) in edges.iter().enumerate() {
            h.add_term(0.5 + 0.25 * k as f64, &[u, v]).unwrap();
        }
        for q in 0..n {
            h.add_term(-0.5 + 0.1 * q as f64, &[q]).unwrap();
        }
        h
    }

    /// Central finite differences of `evaluate`, column by column.
    fn fd_jacobian(c: &Circuit, params: &[f64], h: f64) -> Vec<Vec<Complex64>> {
        (0..c.n_params())
            .map(|i| {
                let mut p = params.to_vec();
                p[i] += h;
                let plus = c.evaluate(&p).unwrap();
                p[i] -= 2.0 * h;
                let minus = c.evaluate(&p).unwrap();
                plus.amplitudes()
                    .iter()
                    .zip(minus.amplitudes())
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect()
            })
            .collect()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
        diff / scale.max(1e-3)
    }

    #[test]
    fn vqe_counts() {
        let c = build_vqe_ansatz(2, 1).unwrap();
        assert_eq!(c.n_params(), 4);
        let kinds: Vec<_> = c.gates().iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            [
                GateKind::Ry,
                GateKind::Ry,
                GateKind::Cnot,
                GateKind::Cnot,
                GateKind::Ry,
                GateKind::Ry
            ]
        );
        assert_eq!(build_vqe_ansatz(6, 3).unwrap().n_params(), 24);
        assert!(build_vqe_ansatz(1, 1).is_err());
        assert!(build_vqe_ansatz(3, 0).is_err());
    }

    #[test]
    fn vqe_zero_params_is_zero_state() {
        let c = build_vqe_ansatz(4, 3).unwrap();
        let s = c.evaluate(&vec![0.0; c.n_params()]).unwrap();
        assert_eq!(s, Statevector::zero(4).unwrap());
    }

    #[test]
    fn qaoa_counts_and_uniform_start() {
        let h = edge_cost(2, &[(0, 1)]);
        assert_eq!(build_qaoa_circuit(&[(0, 1)], 1, &h).unwrap().n_params(), 2);
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3)];
        let h4 = edge_cost(4, &edges);
        let c = build_qaoa_circuit(&edges, 4, &h4).unwrap();
        assert_eq!(c.n_params(), 8);
        let s = c.evaluate(&[0.0; 8]).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.25, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-14);
        }
        assert!(matches!(
            build_qaoa_circuit(&[(0, 4)], 1, &h4),
            Err(Error::Graph(_))
        ));
    }

    #[test]
    fn evaluate_single_ry() {
        let s = single_ry().evaluate(&[FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_PI_4.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_PI_4.sin(), epsilon = 1e-15);
        assert!(matches!(single_ry().evaluate(&[]), Err(Error::Size(_))));
        assert!(matches!(single_ry().jacobian(&[1.0, 2.0]), Err(Error::Size(_))));
    }

    #[test]
    fn unused_parameter_rejected() {
        let gates = vec![Gate::ry(0, Angle::param(0, 1.0))];
        assert!(Circuit::new(1, gates, 2).is_err());
    }

    #[test]
    fn jacobian_single_ry_analytic() {
        for theta in [0.0, 0.4, 1.7, PI, 5.0] {
            let jac = single_ry().jacobian(&[theta]).unwrap();
            let col = &jac.columns[0];
            assert_abs_diff_eq!(col[0].re, -0.5 * (theta / 2.0).sin(), epsilon = 1e-15);
            assert_abs_diff_eq!(col[1].re, 0.5 * (theta / 2.0).cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(col[0].im, 0.0);
        }
    }

    #[test]
    fn zero_coefficient_gives_zero_column() {
        let c = Circuit::new(1, vec![Gate::ry(0, Angle::param(0, 0.0))], 1).unwrap();
        let jac = c.jacobian(&[0.8]).unwrap();
        assert!(jac.columns[0].iter().all(|a| a.norm() == 0.0));
        let grad = c.energy_gradient(&[0.8], &z_sum(1)).unwrap();
        assert_eq!(grad, vec![0.0]);
    }

    #[test]
    fn gradient_single_ry() {
        let g = single_ry().energy_gradient(&[FRAC_PI_2], &z_sum(1)).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-15);
        for theta in [0.1, 1.0, 2.0, 4.0] {
            let g = single_ry().energy_gradient(&[theta], &z_sum(1)).unwrap();
            assert_abs_diff_eq!(g[0], -theta.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_at_zero_params_matches_fd() {
        let c = build_vqe_ansatz(4, 2).unwrap();
        let h = z_sum(4);
        let p = vec![0.0; c.n_params()];
        let g = c.energy_gradient(&p, &h).unwrap();
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += 1e-5;
            let ep = c.evaluate(&q).unwrap().expectation(&h).unwrap();
            q[i] -= 2e-5;
            let em = c.evaluate(&q).unwrap().expectation(&h).unwrap();
            assert_abs_diff_eq!(g[i], (ep - em) / 2e-5, epsilon = 1e-6);
        }
    }

    /// Clones a QAOA circuit giving every parameterized gate its own
    /// parameter, so each column is a single-gate derivative.
    fn unshared(c: &Circuit, params: &[f64]) -> (Circuit, Vec<f64>, Vec<usize>) {
        let mut gates = Vec::new();
        let mut expanded = Vec::new();
        let mut owner = Vec::new();
        for g in c.gates() {
            let mut g = g.clone();
            if let Some((index, coefficient)) = g.param_source() {
                g.angle = Some(Angle::param(expanded.len(), coefficient));
                expanded.push(params[index]);
                owner.push(index);
            }
            gates.push(g);
        }
        let n = expanded.len();
        (Circuit::new(c.n_qubits(), gates, n).unwrap(), expanded, owner)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(25))]

        #[test]
        fn vqe_jacobian_matches_fd(params in prop::collection::vec(0.0f64..2.0 * PI, 12)) {
            let c = build_vqe_ansatz(3, 3).unwrap();
            let jac = c.jacobian(&params).unwrap();
            let fd = fd_jacobian(&c, &params, 1e-5);
            for (a, b) in jac.columns.iter().zip(&fd) {
                prop_assert!(rel_err(a, b) < 1e-6);
            }
            for col in &jac.columns {
                let overlap = sim::inner_slices(col, jac.base_state.amplitudes());
                prop_assert!(overlap.re.abs() < 1e-10);
            }
        }

        #[test]
        fn qaoa_jacobian_matches_fd_and_unshared_sum(params in prop::collection::vec(0.0f64..2.0 * PI, 6)) {
            let edges = [(0, 1), (1, 2), (0, 2), (2, 3)];
            let h = edge_cost(4, &edges);
            let c = build_qaoa_circuit(&edges, 3, &h).unwrap();
            let jac = c.jacobian(&params).unwrap();
            let fd = fd_jacobian(&c, &params, 1e-5);
            for (a, b) in jac.columns.iter().zip(&fd) {
                prop_assert!(rel_err(a, b) < 1e-6);
            }

            let (split, expanded, owner) = unshared(&c, &params);
            let split_jac = split.jacobian(&expanded).unwrap();
            let mut summed = vec![vec![Complex64::new(0.0, 0.0); 16]; c.n_params()];
            for (col, &o) in split_jac.columns.iter().zip(&owner) {
                for (s, v) in summed[o].iter_mut().zip(col) {
                    *s += v;
                }
            }
            for (a, b) in jac.columns.iter().zip(&summed) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn energy_gradient_matches_fd(params in prop::collection::vec(0.0f64..2.0 * PI, 8)) {
            let edges = [(0, 1), (1, 2), (0, 2), (2, 3)];
            let h = edge_cost(4, &edges);
            let c = build_qaoa_circuit(&edges, 4, &h).unwrap();
            let g = c.energy_gradient(&params, &h).unwrap();
            for i in 0..params.len() {
                let mut q = params.clone();
                q[i] += 1e-5;
                let ep = c.evaluate(&q).unwrap().expectation(&h).unwrap();
                q[i] -= 2e-5;
                let em = c.evaluate(&q).unwrap().expectation(&h).unwrap();
                let fd = (ep - em) / 2e-5;
                prop_assert!((g[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }
}
