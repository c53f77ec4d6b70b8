//! Laser-parameter optimization, robustness scans over the geometry and the
//! system-size study.

pub mod nelder_mead;
mod objective;
mod scaling;
mod scan;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LaserParams;
use nelder_mead::{minimize, SimplexControl};

pub use objective::{
    evaluate_objective, Backend, Evaluation, LatticeSpec, MarginalRun, Measure, Numerics, ObjectiveSpec,
    ObjectiveValue, Scenario, DENSE_MAX_N,
};
pub use scaling::{scaling_study, ScalingRow, ScalingSpec};
pub use scan::{box_minimum, contour_segments, linspace, robustness_scan, Contour, ScanGrid};

/// Search box for (Omega_p, Delta_p, Omega_c, Delta_c) in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: [-120.0; 4],
            upper: [120.0; 4],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for k in 0..4 {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!("bad bounds [{lo}, {hi}] in coordinate {k}")));
            }
        }
        Ok(())
    }

    pub fn from_unit(&self, u: &[f64]) -> LaserParams {
        let mut a = [0.0; 4];
        for k in 0..4 {
            a[k] = self.lower[k] + u[k].clamp(0.0, 1.0) * (self.upper[k] - self.lower[k]);
        }
        LaserParams::from_array(a)
    }

    pub fn to_unit(&self, p: &LaserParams) -> [f64; 4] {
        let a = p.to_array();
        let mut u = [0.0; 4];
        for k in 0..4 {
            let w = self.upper[k] - self.lower[k];
            u[k] = if w > 0.0 { ((a[k] - self.lower[k]) / w).clamp(0.0, 1.0) } else { 0.0 };
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    /// Total number of objective evaluations.
    pub budget: usize,
    /// Latin-hypercube starting points.
    pub starts: usize,
    pub seed: u64,
    /// Initial simplex edge in unit-cube coordinates.
    pub step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    /// Evaluations per simplex run before a restart.
    pub evals_per_run: usize,
    /// Restarts from the same start when the previous run still improved.
    pub max_restarts: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            budget: 2000,
            starts: 16,
            seed: 0,
            step: 0.1,
            f_tol: 1e-6,
            x_tol: 1e-4,
            evals_per_run: 300,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub params: LaserParams,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_params: LaserParams,
    pub best_value: f64,
    pub evaluations: usize,
    /// Every evaluation in the order it was made.
    pub trace: Vec<TraceEntry>,
    pub seed: u64,
}

/// Latin-hypercube sample of `n` points in the unit cube.
pub fn latin_hypercube(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    for k in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p[k] = (s as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maximizes `f` over `bounds` with multi-start Nelder-Mead.
///
/// Starting points are evaluated concurrently; the local searches run in
/// order of decreasing start value, so the trace is reproducible per seed.
pub fn maximize<F>(f: F, bounds: &Bounds, options: &OptimizeOptions) -> Result<OptimResult>
where
    F: Fn(&LaserParams) -> f64 + Sync + Send,
{
    bounds.validate()?;
    if options.budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let n_starts = options.starts.clamp(1, options.budget);
    let starts = latin_hypercube(n_starts, 4, &mut rng);
    let start_values = map_indexed(n_starts, |i| f(&bounds.from_unit(&starts[i])));

    let mut trace: Vec<TraceEntry> = starts
        .iter()
        .zip(&start_values)
        .map(|(u, &value)| TraceEntry { params: bounds.from_unit(u), value })
        .collect();

    let mut order: Vec<usize> = (0..n_starts).collect();
    order.sort_by(|&a, &b| start_values[b].total_cmp(&start_values[a]).then(a.cmp(&b)));

    for &s in &order {
        let mut x = starts[s].clone();
        let mut fx = -start_values[s];
        for _ in 0..=options.max_restarts {
            let remaining = options.budget - trace.len();
            if remaining == 0 {
                break;
            }
            let control = SimplexControl {
                step: options.step,
                f_tol: options.f_tol,
                x_tol: options.x_tol,
                max_evals: options.evals_per_run.min(remaining),
            };
            let run = minimize(
                |u| {
                    let params = bounds.from_unit(u);
                    let value = f(&params);
                    trace.push(TraceEntry { params, value });
                    -value
                },
                &x,
                &control,
            );
            let improved = fx - run.f > options.f_tol;
            if run.f < fx {
                x = run.x;
                fx = run.f;
            }
            // restart while fresh simplices keep improving
            if !improved {
                break;
            }
        }
        if trace.len() >= options.budget {
            break;
        }
    }

    let best = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value).then(b.0.cmp(&a.0)))
        .map(|(_, e)| *e)
        .expect("at least one evaluation");
    Ok(OptimResult {
        best_params: best.params,
        best_value: best.value,
        evaluations: trace.len(),
        trace,
        seed: options.seed,
    })
}

/// Maximizes the objective described by `spec`.
pub fn optimize(spec: &ObjectiveSpec, bounds: &Bounds, options: &OptimizeOptions) -> Result<OptimResult> {
    spec.validate()?;
    maximize(|p| evaluate_objective(spec, p).value, bounds, options)
}
