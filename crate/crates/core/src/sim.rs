//! Dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of a basis index. Gates are applied
//! in place with stride loops; no 2^n × 2^n matrix is ever built.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_QUBITS: usize = 14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// The reference state |0…0⟩.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// not renormalized, so this also serves for derivative states.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state |index⟩.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero(n_qubits)?;
        if index >= state.dim() {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = ONE;
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` in place.
    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64]) -> Result<()> {
        gate.validate(self.n_qubits, params.len())?;
        apply_unchecked(&mut self.amplitudes, gate, params);
        Ok(())
    }

    /// Returns the image of `self` under `gate`, leaving `self` untouched.
    pub fn with_gate(&self, gate: &Gate, params: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate(gate, params)?;
        Ok(out)
    }

    /// ⟨self, other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Size(format!(
                "inner product of dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(inner_slices(&self.amplitudes, &other.amplitudes))
    }

    /// ⟨ψ, Hψ⟩ for a diagonal Hamiltonian.
    pub fn expectation(&self, h: &PauliHamiltonian) -> Result<f64> {
        h.check_qubits(self.n_qubits)?;
        let mut total = h.constant_offset;
        for term in &h.terms {
            let mask = term.mask();
            let signed: f64 = self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| parity_sign(i, mask) * a.norm_sqr())
                .sum();
            total += term.coefficient * signed;
        }
        Ok(total)
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Size(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn parity_sign(index: usize, mask: usize) -> f64 {
    if (index & mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Where a rotation angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Fixed(f64),
    /// `coefficient * params[index]`.
    Param { index: usize, coefficient: f64 },
}

impl Angle {
    pub fn param(index: usize, coefficient: f64) -> Self {
        Angle::Param { index, coefficient }
    }

    fn value(self, params: &[f64]) -> f64 {
        match self {
            Angle::Fixed(theta) => theta,
            Angle::Param { index, coefficient } => coefficient * params[index],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    /// targets = [control, target]
    Cnot,
    Rx,
    Ry,
    Rz,
    Rzz,
    /// exp(−iθ/2 · Z_S) over an arbitrary support S = targets.
    PauliRotation,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::H | GateKind::Cnot)
    }

    fn arity(self) -> Option<usize> {
        match self {
            GateKind::H | GateKind::Rx | GateKind::Ry | GateKind::Rz => Some(1),
            GateKind::Cnot | GateKind::Rzz => Some(2),
            GateKind::PauliRotation => None,
        }
    }
}

/// A gate acting on distinct target qubits. Rotations are exp(−iθP/2) for
/// their Pauli generator P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angle: Option<Angle>,
}

impl Gate {
    pub fn h(qubit: usize) -> Self {
        Self::fixed(GateKind::H, vec![qubit])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::Cnot, vec![control, target])
    }

    pub fn rx(qubit: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Rx, vec![qubit], angle)
    }

    pub fn ry(qubit: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Ry, vec![qubit], angle)
    }

    pub fn rz(qubit: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Rz, vec![qubit], angle)
    }

    pub fn rzz(a: usize, b: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::Rzz, vec![a, b], angle)
    }

    pub fn pauli_rotation(support: Vec<usize>, angle: Angle) -> Self {
        Self::rotation(GateKind::PauliRotation, support, angle)
    }

    fn fixed(kind: GateKind, targets: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            angle: None,
        }
    }

    fn rotation(kind: GateKind, targets: Vec<usize>, angle: Angle) -> Self {
        Self {
            kind,
            targets,
            angle: Some(angle),
        }
    }

    /// Parameter index and coefficient, if the angle is parameterized.
    pub fn param_source(&self) -> Option<(usize, f64)> {
        match self.angle {
            Some(Angle::Param { index, coefficient }) => Some((index, coefficient)),
            _ => None,
        }
    }

    pub fn validate(&self, n_qubits: usize, n_params: usize) -> Result<()> {
        if let Some(arity) = self.kind.arity() {
            if self.targets.len() != arity {
                return Err(Error::Index(format!(
                    "{:?} expects {arity} targets, got {}",
                    self.kind,
                    self.targets.len()
                )));
            }
        } else if self.targets.is_empty() {
            return Err(Error::Index("Pauli rotation with empty support".into()));
        }
        for (k, &q) in self.targets.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::Index(format!(
                    "target qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            if self.targets[..k].contains(&q) {
                return Err(Error::Index(format!("repeated target qubit {q}")));
            }
        }
        match (self.kind.is_rotation(), self.angle) {
            (true, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} requires an angle",
                    self.kind
                )))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} takes no angle",
                    self.kind
                )))
            }
            (true, Some(Angle::Param { index, .. })) if index >= n_params => {
                return Err(Error::Index(format!(
                    "parameter index {index} out of range for {n_params} parameters"
                )))
            }
            _ => {}
        }
        Ok(())
    }

    fn mask(&self) -> usize {
        self.targets.iter().fold(0, |m, &q| m | (1 << q))
    }
}

/// Applies a validated gate to raw amplitudes.
pub(crate) fn apply_unchecked(amps: &mut [Complex64], gate: &Gate, params: &[f64]) {
    let theta = gate.angle.map(|a| a.value(params)).unwrap_or(0.0);
    match gate.kind {
        GateKind::H => {
            let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
            apply_1q(amps, gate.targets[0], [[s, s], [s, -s]]);
        }
        GateKind::Cnot => {
            let control = 1usize << gate.targets[0];
            let target = 1usize << gate.targets[1];
            for i in 0..amps.len() {
                if i & control != 0 && i & target == 0 {
                    amps.swap(i, i | target);
                }
            }
        }
        GateKind::Rx => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let c = Complex64::new(c, 0.0);
            let ms = Complex64::new(0.0, -s);
            apply_1q(amps, gate.targets[0], [[c, ms], [ms, c]]);
        }
        GateKind::Ry => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let c = Complex64::new(c, 0.0);
            let s = Complex64::new(s, 0.0);
            apply_1q(amps, gate.targets[0], [[c, -s], [s, c]]);
        }
        GateKind::Rz | GateKind::Rzz | GateKind::PauliRotation => {
            let mask = gate.mask();
            let even = Complex64::from_polar(1.0, -theta / 2.0);
            let odd = even.conj();
            for (i, a) in amps.iter_mut().enumerate() {
                *a *= if (i & mask).count_ones().is_multiple_of(2) {
                    even
                } else {
                    odd
                };
            }
        }
    }
}

/// Applies the Pauli generator P of a rotation gate (X, Y or Z_S).
pub(crate) fn apply_generator(amps: &mut [Complex64], gate: &Gate) {
    match gate.kind {
        GateKind::Rx => {
            let bit = 1usize << gate.targets[0];
            for i in 0..amps.len() {
                if i & bit == 0 {
                    amps.swap(i, i | bit);
                }
            }
        }
        GateKind::Ry => apply_1q(amps, gate.targets[0], [[ZERO, -I], [I, ZERO]]),
        GateKind::Rz | GateKind::Rzz | GateKind::PauliRotation => {
            let mask = gate.mask();
            for (i, a) in amps.iter_mut().enumerate() {
                if (i & mask).count_ones() % 2 == 1 {
                    *a = -*a;
                }
            }
        }
        GateKind::H | GateKind::Cnot => unreachable!("fixed gates have no generator"),
    }
}

fn apply_1q(amps: &mut [Complex64], qubit: usize, m: [[Complex64; 2]; 2]) {
    let bit = 1usize << qubit;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (x, y) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * x + m[0][1] * y;
            amps[i | bit] = m[1][0] * x + m[1][1] * y;
        }
    }
}

/// `coefficient · Π_{q ∈ support} Z_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub support: Vec<usize>,
}

impl PauliTerm {
    pub fn mask(&self) -> usize {
        self.support.iter().fold(0, |m, &q| m | (1 << q))
    }
}

/// Weighted sum of Z-products plus a constant. Always diagonal in the
/// computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    pub n_qubits: usize,
    pub terms: Vec<PauliTerm>,
    pub constant_offset: f64,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize, constant_offset: f64) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if !constant_offset.is_finite() {
            return Err(Error::Numerical("non-finite constant offset".into()));
        }
        Ok(Self {
            n_qubits,
            terms: Vec::new(),
            constant_offset,
        })
    }

    /// Adds `coefficient · Z_support`. The support is sorted and must hold
    /// distinct in-range qubits; an empty support adds to the constant.
    pub fn add_term(&mut self, coefficient: f64, support: &[usize]) -> Result<()> {
        if !coefficient.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite coefficient {coefficient}"
            )));
        }
        let mut support = support.to_vec();
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Index(format!("repeated qubit in support {support:?}")));
        }
        if let Some(&q) = support.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Index(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        if support.is_empty() {
            self.constant_offset += coefficient;
        } else {
            self.terms.push(PauliTerm {
                coefficient,
                support,
            });
        }
        Ok(())
    }

    /// Diagonal entry ⟨i|H|i⟩.
    pub fn diagonal_entry(&self, index: usize) -> f64 {
        self.terms
            .iter()
            .fold(self.constant_offset, |acc, t| {
                acc + t.coefficient * parity_sign(index, t.mask())
            })
    }

    /// All 2^n diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![self.constant_offset; 1 << self.n_qubits];
        for term in &self.terms {
            let mask = term.mask();
            for (i, d) in diag.iter_mut().enumerate() {
                *d += term.coefficient * parity_sign(i, mask);
            }
        }
        diag
    }

    fn check_qubits(&self, n_qubits: usize) -> Result<()> {
        if self.n_qubits != n_qubits {
            return Err(Error::Size(format!(
                "Hamiltonian on {} qubits applied to {n_qubits}-qubit state",
                self.n_qubits
            )));
        }
        Ok(())
    }
}
