//! System eigenbasis, target states, marginals, and the two distance measures.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::SpaceSpec;
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as numerical noise and floored at zero;
/// anything more negative is rejected.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Energies in ascending order with eigenvectors as columns. Each vector's
/// first non-negligible component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `<phi_k| rho |phi_k>` for every eigenvector.
    pub fn populations(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        (0..self.energies.len())
            .map(|k| {
                let v = self.vectors.column(k);
                (v.adjoint() * rho * v)[(0, 0)].re
            })
            .collect()
    }
}

pub fn system_eigensystem(h_sys: &DMatrix<C64>) -> Result<Eigensystem> {
    if !h_sys.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h_sys.nrows(),
            found: h_sys.ncols(),
        });
    }
    let eig = h_sys.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = order.len();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let scale = v.amax_complex();
        if let Some(first) = v.iter().copied().find(|z| z.norm() > 1e-10 * scale) {
            v *= first.conj() / first.norm();
        }
        vectors.set_column(k, &v);
    }
    Ok(Eigensystem {
        energies: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors,
    })
}

trait AmaxComplex {
    fn amax_complex(&self) -> f64;
}

impl AmaxComplex for DVector<C64> {
    fn amax_complex(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetKind {
    /// `(|pi_1> + |pi_2>)/sqrt 2`
    BellPlus,
    /// `(|pi_1> - |pi_2>)/sqrt 2`
    BellMinus,
    /// Boltzmann state of the system Hamiltonian at `kT = kt_over_w * W`.
    Thermal { kt_over_w: f64 },
    /// Given populations on the ascending-energy eigenstates.
    CustomEigenmix { populations: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub kind: TargetKind,
    pub rho: DMatrix<C64>,
}

impl TargetKind {
    /// Builds the N x N target for the system Hamiltonian `h_sys`, with `w`
    /// the nearest-neighbour coupling in the same units.
    pub fn realize(&self, h_sys: &DMatrix<C64>, w: f64) -> Result<TargetState> {
        let n = h_sys.nrows();
        let rho = match self {
            TargetKind::BellPlus | TargetKind::BellMinus => {
                if n != 2 {
                    return Err(Error::Precondition(format!("Bell targets need N = 2, got N = {n}")));
                }
                let s = if matches!(self, TargetKind::BellPlus) { 1.0 } else { -1.0 };
                let a = std::f64::consts::FRAC_1_SQRT_2;
                let v = DVector::from_vec(vec![C64::new(a, 0.0), C64::new(s * a, 0.0)]);
                &v * v.adjoint()
            }
            TargetKind::Thermal { kt_over_w } => {
                if !(w.is_finite() && w != 0.0) {
                    return Err(Error::InvalidParameter("coupling W must be nonzero".into()));
                }
                thermal_target(h_sys, kt_over_w * w.abs())?.rho
            }
            TargetKind::CustomEigenmix { populations } => {
                if populations.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: populations.len(),
                    });
                }
                let total: f64 = populations.iter().sum();
                if populations.iter().any(|&p| p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("populations must be non-negative and sum to 1".into()));
                }
                let es = system_eigensystem(h_sys)?;
                eigenmix(&es, populations)
            }
        };
        Ok(TargetState { kind: self.clone(), rho })
    }
}

fn eigenmix(es: &Eigensystem, populations: &[f64]) -> DMatrix<C64> {
    let n = es.energies.len();
    let mut rho = DMatrix::zeros(n, n);
    for (k, &p) in populations.iter().enumerate() {
        let v = es.vectors.column(k);
        rho += v * v.adjoint() * C64::new(p, 0.0);
    }
    rho
}

/// Boltzmann weights `exp(-E_n / kT) / Z` for ascending energies.
pub fn boltzmann_weights(energies: &[f64], kt: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-(e - e0) / kt).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `exp(-H/kT) / Z`.
pub fn thermal_target(h_sys: &DMatrix<C64>, kt: f64) -> Result<TargetState> {
    if !(kt > 0.0 && kt.is_finite()) {
        return Err(Error::NotPositive(kt));
    }
    let es = system_eigensystem(h_sys)?;
    let p = boltzmann_weights(&es.energies, kt);
    Ok(TargetState {
        kind: TargetKind::CustomEigenmix { populations: p.clone() },
        rho: eigenmix(&es, &p),
    })
}

/// Partial trace over all environment atoms.
pub fn system_marginal(rho: &DMatrix<C64>, space: &SpaceSpec) -> Result<DMatrix<C64>> {
    let dim = space.dimension();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.nrows(),
        });
    }
    let n = space.n_system();
    let e = space.env_dimension();
    Ok(DMatrix::from_fn(n, n, |a, b| (0..e).map(|k| rho[(a * e + k, b * e + k)]).sum()))
}

/// System marginal of the pure state `psi`, without forming `|psi><psi|`.
pub fn pure_system_marginal(psi: &[C64], space: &SpaceSpec) -> Result<DMatrix<C64>> {
    let dim = space.dimension();
    if psi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi.len() });
    }
    let e = space.env_dimension();
    Ok(DMatrix::from_fn(space.n_system(), space.n_system(), |a, b| {
        (0..e).map(|k| psi[a * e + k] * psi[b * e + k].conj()).sum()
    }))
}

fn check_pair(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Square root by eigendecomposition, rejecting eigenvalues below
/// `-PSD_TOLERANCE` and flooring the rest at zero.
fn psd_sqrt(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_part(m).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::InvalidState(format!("matrix not positive: eigenvalue {min:e}")));
    }
    // eigenvalues at rounding level are zero; their square roots would not be
    let floor = 100.0 * m.nrows() as f64 * f64::EPSILON * eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let sq = eig.eigenvalues.map(|l| C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&sq) * v.adjoint())
}

/// `Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`, clipped to `[0, 1]`.
///
/// Evaluated as the sum of singular values of `sqrt(rho1) sqrt(rho2)`, which
/// keeps null directions at rounding level instead of their square root.
pub fn fidelity(rho1: &DMatrix<C64>, rho2: &DMatrix<C64>) -> Result<f64> {
    check_pair(rho1, rho2)?;
    let s1 = psd_sqrt(rho1)?;
    let s2 = psd_sqrt(rho2)?;
    let f: f64 = (s1 * s2).singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `1 - Tr|rho1 - rho2| / 2`, clipped to `[0, 1]`.
pub fn trace_distance_fidelity(rho1: &DMatrix<C64>, rho2: &DMatrix<C64>) -> Result<f64> {
    Ok((1.0 - trace_distance(rho1, rho2)?).clamp(0.0, 1.0))
}

/// `Tr|rho1 - rho2| / 2`.
pub fn trace_distance(rho1: &DMatrix<C64>, rho2: &DMatrix<C64>) -> Result<f64> {
    check_pair(rho1, rho2)?;
    for m in [rho1, rho2] {
        let min = hermitian_part(m).symmetric_eigenvalues().min();
        if min < -PSD_TOLERANCE {
            return Err(Error::InvalidState(format!("matrix not positive: eigenvalue {min:e}")));
        }
    }
    let d = hermitian_part(&(rho1 - rho2));
    Ok(0.5 * d.symmetric_eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
}
