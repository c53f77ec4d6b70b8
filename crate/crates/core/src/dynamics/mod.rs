//! Master-equation propagation, steady states, and quantum-jump trajectories.

pub mod integrator;
pub mod lindblad;
pub mod mcwf;
pub mod propagate;
pub mod steady;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use integrator::{OdeSystem, StepControl, StepStats};
pub use lindblad::{lindblad_rhs, vectorized_generator, Liouvillian};
pub use mcwf::{trajectory_on_stream, mcwf_ensemble, mcwf_trajectory, EnsembleInfo, EnsembleProjection, Jump, Trajectory};
pub use propagate::{propagate, propagate_with, PropagateOptions, PropagationResult};
pub use steady::{steady_state, SteadyState, SteadyStateMethod};

/// Tolerances a density matrix must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateTolerance {
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            trace: 1e-8,
            hermiticity: 1e-10,
            positivity: 1e-8,
        }
    }
}

/// Measured deviations of a state from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub trace_error: f64,
    pub hermiticity_residual: f64,
    /// `None` when the eigenvalue check was skipped for size.
    pub min_eigenvalue: Option<f64>,
}

impl Validity {
    pub fn within(&self, tol: &StateTolerance) -> bool {
        self.trace_error <= tol.trace
            && self.hermiticity_residual <= tol.hermiticity
            && self.min_eigenvalue.is_none_or(|l| l >= -tol.positivity)
    }

    /// Worst-case combination of two reports.
    pub fn worst(&self, other: &Validity) -> Validity {
        Validity {
            trace_error: self.trace_error.max(other.trace_error),
            hermiticity_residual: self.hermiticity_residual.max(other.hermiticity_residual),
            min_eigenvalue: match (self.min_eigenvalue, other.min_eigenvalue) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Largest dimension for which eigenvalue checks run during propagation.
pub const EIGEN_CHECK_MAX_DIM: usize = 400;

/// A Hermitian, unit-trace, positive matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / C64::new(norm, 0.0);
        Ok(Self(&v * v.adjoint()))
    }

    /// `|i><i|`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, limit: dim });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, i)] = C64::new(1.0, 0.0);
        Ok(Self(m))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0))
    }

    /// Wraps a matrix after checking the invariants.
    pub fn new(m: DMatrix<C64>, tol: &StateTolerance) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let s = Self(m);
        let v = s.validity(true);
        if !v.within(tol) {
            return Err(Error::InvalidState(format!(
                "trace error {:e}, hermiticity {:e}, min eigenvalue {:?}",
                v.trace_error, v.hermiticity_residual, v.min_eigenvalue
            )));
        }
        Ok(s)
    }

    /// Wraps a matrix without checking; used for integrator output whose
    /// validity is tracked separately.
    pub fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            for r in 0..=c {
                worst = worst.max((self.0[(r, c)] - self.0[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validity(&self, with_eigen: bool) -> Validity {
        Validity {
            trace_error: (self.trace() - C64::new(1.0, 0.0)).norm(),
            hermiticity_residual: self.hermiticity_residual(),
            min_eigenvalue: with_eigen.then(|| self.min_eigenvalue()),
        }
    }

    /// Population of basis state `i`.
    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    /// `<psi| rho |psi>`.
    pub fn expectation_state(&self, psi: &DVector<C64>) -> f64 {
        (psi.adjoint() * &self.0 * psi)[(0, 0)].re
    }
}

impl AsRef<DMatrix<C64>> for DensityMatrix {
    fn as_ref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_properties() {
        let psi = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert!(rho.validity(true).within(&StateTolerance::default()));
    }

    #[test]
    fn rejects_invalid() {
        let tol = StateTolerance::default();
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
        assert!(DensityMatrix::new(m, &tol).is_err());
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.6, 0.0)]));
        assert!(DensityMatrix::new(m, &tol).is_err());
        assert!(DensityMatrix::new(DMatrix::identity(2, 3), &tol).is_err());
        assert!(DensityMatrix::new(DensityMatrix::maximally_mixed(3).into_matrix(), &tol).is_ok());
    }
}
