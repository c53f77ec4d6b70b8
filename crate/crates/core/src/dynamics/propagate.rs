use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate, StepControl, StepStats};
use super::lindblad::Liouvillian;
use super::{DensityMatrix, StateTolerance, Validity, EIGEN_CHECK_MAX_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagateOptions {
    pub control: StepControl,
    /// Measure trace, Hermiticity, and (for small states) positivity of every
    /// output state.
    pub validate: bool,
    /// Fail when an output state violates these tolerances.
    pub enforce: Option<StateTolerance>,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            control: StepControl::default(),
            validate: true,
            enforce: None,
        }
    }
}

impl PropagateOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            control: StepControl::with_tolerances(rtol, atol),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub stats: StepStats,
    /// Worst invariant deviation over all output states.
    pub validity: Option<Validity>,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if t_grid[0] < 0.0 || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must be finite and start at t >= 0".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Propagates `rho0` from `t = 0` and hands each output state to `observe`
/// without storing it. Returns step statistics and the worst validity report.
pub fn propagate_with<F>(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    options: &PropagateOptions,
    mut observe: F,
) -> Result<(StepStats, Option<Validity>)>
where
    F: FnMut(usize, f64, &DensityMatrix) -> Result<()>,
{
    check_grid(t_grid)?;
    let n = liouvillian.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho0.dim(),
        });
    }
    let mut worst: Option<Validity> = None;
    let stats = integrate(
        liouvillian,
        0.0,
        rho0.matrix().as_slice(),
        t_grid,
        options.control,
        |idx, t, y: &[C64]| {
            let rho = DensityMatrix::from_matrix_unchecked(DMatrix::from_column_slice(n, n, y));
            if options.validate {
                let v = rho.validity(n <= EIGEN_CHECK_MAX_DIM);
                if let Some(tol) = &options.enforce {
                    if !v.within(tol) {
                        return Err(Error::InvalidState(format!(
                            "state at t = {t} violates invariants: {v:?}"
                        )));
                    }
                }
                worst = Some(worst.map_or(v, |w| w.worst(&v)));
            }
            observe(idx, t, &rho)
        },
    )?;
    Ok((stats, worst))
}

/// Adaptive integration of the master equation, with dense output at each
/// time in `t_grid` (strictly increasing, starting at or after `t = 0`).
pub fn propagate(
    liouvillian: &Liouvillian,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    options: &PropagateOptions,
) -> Result<PropagationResult> {
    let mut states = Vec::with_capacity(t_grid.len());
    let (stats, validity) = propagate_with(liouvillian, rho0, t_grid, options, |_, _, rho| {
        states.push(rho.clone());
        Ok(())
    })?;
    Ok(PropagationResult {
        times: t_grid.to_vec(),
        states,
        stats,
        validity,
    })
}
