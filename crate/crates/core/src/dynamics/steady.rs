use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{StepControl, StepStats, Stepper};
use super::lindblad::Liouvillian;
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SteadyStateMethod {
    /// Long-time propagation from `|0><0|` (index 0 is `|pi_1, g...g>`),
    /// checking the residual every `check_interval` microseconds.
    Propagation {
        control: StepControl,
        check_interval: f64,
        t_max: f64,
    },
    /// Direct solve of the generator on the real Hermitian parametrization
    /// with the trace condition substituted for one population equation.
    NullSpace,
    /// Null space when the real parametrization has at most `max_null_dim`
    /// unknowns, otherwise propagation with default settings.
    Auto { max_null_dim: usize },
}

impl SteadyStateMethod {
    pub fn propagation() -> Self {
        Self::Propagation {
            control: StepControl::with_tolerances(1e-6, 1e-9),
            check_interval: 0.25,
            t_max: 50.0,
        }
    }
}

impl Default for SteadyStateMethod {
    fn default() -> Self {
        Self::Auto { max_null_dim: 1296 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `max |L(rho)|` in rad/us.
    pub residual: f64,
    /// Residual threshold that was required.
    pub threshold: f64,
    /// Propagation time used; zero for the direct solve.
    pub time: f64,
    /// More than one independent stationary state was found.
    pub degenerate: bool,
    pub stats: StepStats,
}

fn residual(l: &Liouvillian, rho: &[C64]) -> f64 {
    let mut out = vec![C64::new(0.0, 0.0); rho.len()];
    l.apply(rho, &mut out);
    out.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residual threshold `1e-10 * max|H_ij|`, floored for a vanishing Hamiltonian.
pub fn residual_threshold(l: &Liouvillian) -> f64 {
    1e-10 * l.hamiltonian().max_abs().max(1e-3)
}

/// Stationary state of the master equation.
pub fn steady_state(l: &Liouvillian, method: &SteadyStateMethod) -> Result<SteadyState> {
    if l.lindblad_operators().is_empty() {
        return Err(Error::Precondition("steady state needs at least one Lindblad operator".into()));
    }
    match *method {
        SteadyStateMethod::Propagation {
            control,
            check_interval,
            t_max,
        } => by_propagation(l, control, check_interval, t_max),
        SteadyStateMethod::NullSpace => by_null_space(l),
        SteadyStateMethod::Auto { max_null_dim } => {
            if l.dim() * l.dim() <= max_null_dim {
                by_null_space(l)
            } else {
                steady_state(l, &SteadyStateMethod::propagation())
            }
        }
    }
}

fn by_propagation(l: &Liouvillian, control: StepControl, check_interval: f64, t_max: f64) -> Result<SteadyState> {
    if !(check_interval > 0.0 && t_max > 0.0) {
        return Err(Error::InvalidParameter("check interval and horizon must be positive".into()));
    }
    let n = l.dim();
    let threshold = residual_threshold(l);
    let rho0 = DensityMatrix::basis(n, 0)?;
    let mut control = control;
    if !control.h_max.is_finite() {
        control.h_max = 0.8 / spectral_spread(l.hamiltonian()).max(1e-12);
    }
    let mut stepper = Stepper::new(l, 0.0, rho0.matrix().as_slice(), control)?;
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    let mut next = check_interval;
    loop {
        while stepper.t() < next {
            stepper.step()?;
        }
        stepper.interpolate(next, &mut buf);
        let last = residual(l, &buf);
        if last <= threshold {
            let rho = DensityMatrix::from_matrix_unchecked(hermitize(DMatrix::from_column_slice(n, n, &buf)));
            return Ok(SteadyState {
                residual: residual(l, rho.matrix().as_slice()),
                rho,
                threshold,
                time: next,
                degenerate: false,
                stats: stepper.stats(),
            });
        }
        if next >= t_max {
            return Err(Error::NotConverged {
                time: next,
                residual: last,
                threshold,
            });
        }
        next = (next + check_interval).min(t_max);
    }
}

/// `E_max - E_min` of the Hamiltonian: exact for small dimensions, a
/// Gershgorin bound otherwise. Coherences oscillate at most this fast, and
/// the integrator is only stable on the imaginary axis for `|h lambda| < 0.95`,
/// so steady-state runs cap the step at `0.8 / spread`.
pub fn spectral_spread(h: &OperatorMatrix) -> f64 {
    if h.dim() <= 1500 {
        let ev = h.to_dense().symmetric_eigenvalues();
        ev.max() - ev.min()
    } else {
        let row_sum = |r| h.row(r).map(|(_, v)| v.norm()).sum::<f64>();
        2.0 * (0..h.dim()).map(row_sum).fold(0.0, f64::max)
    }
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C64::new(tr, 0.0)
}

/// Index map of the real parametrization: diagonal entries first, then
/// `(Re, Im)` of each upper-triangular coherence.
fn real_basis(n: usize) -> Vec<(usize, usize, bool)> {
    let mut out: Vec<_> = (0..n).map(|i| (i, i, false)).collect();
    for c in 0..n {
        for r in 0..c {
            out.push((r, c, false));
            out.push((r, c, true));
        }
    }
    out
}

fn to_real(basis: &[(usize, usize, bool)], m: &[C64], n: usize) -> DVector<f64> {
    DVector::from_iterator(
        basis.len(),
        basis.iter().map(|&(r, c, imag)| {
            let z = m[r + c * n];
            if imag {
                z.im
            } else {
                z.re
            }
        }),
    )
}

fn from_real(basis: &[(usize, usize, bool)], x: &DVector<f64>, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for (&(r, c, imag), &v) in basis.iter().zip(x.iter()) {
        if r == c {
            m[(r, r)] = C64::new(v, 0.0);
        } else if imag {
            m[(r, c)].im += v;
            m[(c, r)].im -= v;
        } else {
            m[(r, c)].re += v;
            m[(c, r)].re += v;
        }
    }
    m
}

/// Real matrix of the generator on Hermitian matrices.
pub fn real_generator(l: &Liouvillian) -> DMatrix<f64> {
    let n = l.dim();
    let basis = real_basis(n);
    let m = basis.len();
    let mut g = DMatrix::zeros(m, m);
    let mut e = vec![C64::new(0.0, 0.0); n * n];
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for (j, &(r, c, imag)) in basis.iter().enumerate() {
        e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        if r == c {
            e[r + c * n] = C64::new(1.0, 0.0);
        } else if imag {
            e[r + c * n] = C64::new(0.0, 1.0);
            e[c + r * n] = C64::new(0.0, -1.0);
        } else {
            e[r + c * n] = C64::new(1.0, 0.0);
            e[c + r * n] = C64::new(1.0, 0.0);
        }
        l.apply(&e, &mut out);
        g.set_column(j, &to_real(&basis, &out, n));
    }
    g
}

/// Largest real dimension for which the null space is resolved by SVD, so
/// that degeneracy can be detected.
const SVD_MAX: usize = 400;

fn by_null_space(l: &Liouvillian) -> Result<SteadyState> {
    let n = l.dim();
    let threshold = residual_threshold(l);
    let basis = real_basis(n);
    let g = real_generator(l);
    let m = basis.len();
    let (x, degenerate) = if m <= SVD_MAX {
        let svd = g.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let smax = svd.singular_values.max();
        let tol = 1e-9 * smax.max(1e-300);
        let null: Vec<usize> = (0..m).filter(|&i| svd.singular_values[i] <= tol).collect();
        if null.is_empty() {
            return Err(Error::Singular("generator has no stationary state".into()));
        }
        // prefer the null vector with the largest trace
        let best = null
            .iter()
            .copied()
            .map(|i| (i, v_t.row(i).columns(0, n).sum()))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty");
        if best.1.abs() < 1e-12 {
            return Err(Error::Singular("stationary vector is traceless".into()));
        }
        (v_t.row(best.0).transpose() / best.1, null.len() > 1)
    } else {
        let mut a = g;
        // trace condition replaces the equation for d(rho_00)/dt
        for j in 0..m {
            a[(0, j)] = if j < n { 1.0 } else { 0.0 };
        }
        let mut b = DVector::zeros(m);
        b[0] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular("degenerate stationary subspace".into()))?;
        (x, false)
    };
    let rho = DensityMatrix::from_matrix_unchecked(hermitize(from_real(&basis, &x, n)));
    Ok(SteadyState {
        residual: residual(l, rho.matrix().as_slice()),
        rho,
        threshold,
        time: 0.0,
        degenerate,
        stats: StepStats::default(),
    })
}
