//! Quantum geometric tensor, Fubini-Study metric and the regularized
//! natural-gradient solve.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::circuits::StateJacobian;
use crate::sim::inner_slices;
use crate::{Error, Result};

/// Default Tikhonov shift added to the metric before solving.
pub const DEFAULT_LAMBDA: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-10;

/// G (complex QGT), g = Re G, and the regularizer λ used when solving.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    pub qgt: DMatrix<Complex64>,
    pub metric: DMatrix<f64>,
    pub lambda: f64,
}

impl MetricTensor {
    /// G_ij = ⟨∂ᵢψ, ∂ⱼψ⟩ − ⟨∂ᵢψ, ψ⟩⟨ψ, ∂ⱼψ⟩, Hermitized after checking that
    /// the raw matrix is Hermitian to within 1e-10.
    pub fn from_jacobian(jac: &StateJacobian) -> Result<Self> {
        let psi = jac.base_state.amplitudes();
        if let Some(bad) = jac.columns.iter().find(|c| c.len() != psi.len()) {
            return Err(Error::Size(format!(
                "jacobian column of length {} for state of dimension {}",
                bad.len(),
                psi.len()
            )));
        }
        let d = jac.n_params();
        // ⟨ψ, ∂ⱼψ⟩
        let overlaps: Vec<Complex64> = jac.columns.iter().map(|c| inner_slices(psi, c)).collect();
        let raw = DMatrix::from_fn(d, d, |i, j| {
            inner_slices(&jac.columns[i], &jac.columns[j]) - overlaps[i].conj() * overlaps[j]
        });

        let scale = raw.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asymmetry = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (raw[(i, j)] - raw[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if asymmetry > HERMITIAN_TOL * scale {
            return Err(Error::Numerical(format!(
                "quantum geometric tensor not Hermitian (asymmetry {asymmetry:e})"
            )));
        }
        let qgt = (&raw + raw.adjoint()).map(|z| z * 0.5);
        let metric = qgt.map(|z| z.re);
        Ok(Self {
            qgt,
            metric,
            lambda: DEFAULT_LAMBDA,
        })
    }

    /// Wraps an explicit real metric (used for identity-metric reductions).
    pub fn from_metric(metric: DMatrix<f64>) -> Result<Self> {
        if !metric.is_square() {
            return Err(Error::Size(format!(
                "metric is {}x{}",
                metric.nrows(),
                metric.ncols()
            )));
        }
        Ok(Self {
            qgt: metric.map(|x| Complex64::new(x, 0.0)),
            metric,
            lambda: DEFAULT_LAMBDA,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.metric.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves (g + λI)x = grad.
///
/// Cholesky first; if the shifted metric is not numerically positive
/// definite, falls back to a pseudo-solve on the symmetric eigendecomposition
/// that drops eigenvalues at or below d·ε·‖g‖.
pub fn natural_direction(m: &MetricTensor, grad: &[f64]) -> Result<Vec<f64>> {
    let d = m.dim();
    if grad.len() != d {
        return Err(Error::Size(format!(
            "gradient of length {} for {d}x{d} metric",
            grad.len()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical("non-finite gradient".into()));
    }
    if m.metric.iter().any(|g| !g.is_finite()) || !m.lambda.is_finite() {
        return Err(Error::Numerical("non-finite metric".into()));
    }
    let shifted = &m.metric + DMatrix::identity(d, d) * m.lambda;
    let rhs = DVector::from_column_slice(grad);

    let x = match Cholesky::new(shifted.clone()) {
        Some(chol) => chol.solve(&rhs),
        None => pseudo_solve(shifted, &rhs),
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "natural-gradient solve produced non-finite values".into(),
        ));
    }
    Ok(x.as_slice().to_vec())
}

fn pseudo_solve(a: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let d = a.nrows();
    let eig = SymmetricEigen::new(a);
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = largest * d as f64 * f64::EPSILON;
    let mut x = DVector::zeros(d);
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu > cutoff {
            let v = eig.eigenvectors.column(k);
            x += v * (v.dot(rhs) / mu);
        }
    }
    x
}
