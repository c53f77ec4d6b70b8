//! Quantum-jump unraveling with the waiting-time (norm threshold) scheme.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrator::{OdeSystem, StepControl, StepStats, Stepper};
use super::lindblad::Liouvillian;
use super::propagate::PropagationResult;
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    /// Index of the Lindblad operator (environment atom) that fired.
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    /// Stream of the seeded generator; the trajectory index within an ensemble.
    pub stream: u64,
    pub times: Vec<f64>,
    /// Normalized states at `times`.
    pub states: Vec<DVector<C64>>,
    pub jumps: Vec<Jump>,
    pub stats: StepStats,
}

/// What an ensemble accumulates per output time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleProjection {
    Full,
    /// Reduced state of the first `n_system` tensor factor.
    SystemMarginal { n_system: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleInfo {
    pub seed: u64,
    pub n_traj: usize,
    pub jumps_per_trajectory: Vec<usize>,
}

struct NoJump<'a>(&'a OperatorMatrix);

impl OdeSystem for NoJump<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.mul_vec(y, dy);
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    // uniform on (0, 1]
    1.0 - rng.random::<f64>()
}

/// Runs one trajectory; `visit(index, t, psi)` receives the normalized state
/// at each output time.
fn run<F>(
    l: &Liouvillian,
    psi0: &[C64],
    t_grid: &[f64],
    control: StepControl,
    seed: u64,
    stream: u64,
    mut visit: F,
) -> Result<(Vec<Jump>, StepStats)>
where
    F: FnMut(usize, f64, &[C64]),
{
    let n = l.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    if (norm_sqr(psi0) - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("initial state must be normalized".into()));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be increasing from t >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sys = NoJump(l.effective_generator());
    let mut stepper = Stepper::new(&sys, 0.0, psi0, control)?;
    let mut threshold = draw(&mut rng);
    let mut jumps = Vec::new();
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    let emit = |idx: usize, t: f64, v: &[C64], visit: &mut F| {
        let s = norm_sqr(v).sqrt();
        let w: Vec<C64> = v.iter().map(|z| z / s).collect();
        visit(idx, t, &w);
    };
    let mut idx = 0;
    while idx < t_grid.len() && t_grid[idx] == 0.0 {
        emit(idx, 0.0, psi0, &mut visit);
        idx += 1;
    }
    while idx < t_grid.len() {
        stepper.step()?;
        let t1 = stepper.t();
        let jump_time = if norm_sqr(stepper.y()) < threshold {
            let (mut lo, mut hi) = (stepper.t_prev(), t1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                stepper.interpolate(mid, &mut buf);
                if norm_sqr(&buf) < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-13 * hi.max(1.0) {
                    break;
                }
            }
            Some(hi)
        } else {
            None
        };
        let horizon = jump_time.unwrap_or(t1);
        while idx < t_grid.len() && t_grid[idx] <= horizon {
            stepper.interpolate(t_grid[idx], &mut buf);
            emit(idx, t_grid[idx], &buf, &mut visit);
            idx += 1;
        }
        if let Some(tj) = jump_time {
            stepper.interpolate(tj, &mut buf);
            let weights: Vec<f64> = l
                .lindblad_operators()
                .iter()
                .map(|op| {
                    op.mul_vec(&buf, &mut scratch);
                    norm_sqr(&scratch)
                })
                .collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                // nothing can fire; carry on with a fresh threshold
                threshold = draw(&mut rng) * norm_sqr(&buf);
                while idx < t_grid.len() && t_grid[idx] <= t1 {
                    stepper.interpolate(t_grid[idx], &mut buf);
                    emit(idx, t_grid[idx], &buf, &mut visit);
                    idx += 1;
                }
                continue;
            }
            let pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            let mut acc = 0.0;
            for (a, w) in weights.iter().enumerate() {
                acc += w;
                if pick < acc {
                    channel = a;
                    break;
                }
            }
            l.lindblad_operators()[channel].mul_vec(&buf, &mut scratch);
            let s = norm_sqr(&scratch).sqrt();
            scratch.iter_mut().for_each(|z| *z /= s);
            stepper.reset(tj, &scratch);
            jumps.push(Jump { time: tj, channel });
            threshold = draw(&mut rng);
        }
    }
    Ok((jumps, stepper.stats()))
}

/// Single quantum trajectory from the normalized state `psi0`, using stream 0
/// of the generator seeded with `seed`.
pub fn mcwf_trajectory(
    l: &Liouvillian,
    psi0: &DVector<C64>,
    t_grid: &[f64],
    seed: u64,
    control: StepControl,
) -> Result<Trajectory> {
    trajectory_on_stream(l, psi0, t_grid, seed, 0, control)
}

pub fn trajectory_on_stream(
    l: &Liouvillian,
    psi0: &DVector<C64>,
    t_grid: &[f64],
    seed: u64,
    stream: u64,
    control: StepControl,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(t_grid.len());
    let (jumps, stats) = run(l, psi0.as_slice(), t_grid, control, seed, stream, |_, _, psi| {
        states.push(DVector::from_column_slice(psi));
    })?;
    Ok(Trajectory {
        seed,
        stream,
        times: t_grid.to_vec(),
        states,
        jumps,
        stats,
    })
}

fn accumulate(acc: &mut DMatrix<C64>, psi: &[C64], projection: EnsembleProjection) {
    match projection {
        EnsembleProjection::Full => {
            let n = psi.len();
            for c in 0..n {
                let pc = psi[c].conj();
                if pc == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..n {
                    acc[(r, c)] += psi[r] * pc;
                }
            }
        }
        EnsembleProjection::SystemMarginal { n_system } => {
            let e = psi.len() / n_system;
            for a in 0..n_system {
                for b in 0..n_system {
                    let mut s = C64::new(0.0, 0.0);
                    for k in 0..e {
                        s += psi[a * e + k] * psi[b * e + k].conj();
                    }
                    acc[(a, b)] += s;
                }
            }
        }
    }
}

struct Partial {
    sums: Vec<DMatrix<C64>>,
    jumps: Vec<usize>,
    stats: StepStats,
}

#[allow(clippy::too_many_arguments)]
fn run_chunk(
    l: &Liouvillian,
    psi0: &DVector<C64>,
    t_grid: &[f64],
    seed: u64,
    range: std::ops::Range<usize>,
    projection: EnsembleProjection,
    control: StepControl,
    out_dim: usize,
) -> Result<Partial> {
    let mut sums = vec![DMatrix::zeros(out_dim, out_dim); t_grid.len()];
    let mut jumps = Vec::with_capacity(range.len());
    let mut stats = StepStats::default();
    for traj in range {
        let (j, s) = run(l, psi0.as_slice(), t_grid, control, seed, traj as u64, |idx, _, psi| {
            accumulate(&mut sums[idx], psi, projection);
        })?;
        jumps.push(j.len());
        stats.merge(&s);
    }
    Ok(Partial { sums, jumps, stats })
}

/// Trajectories per work unit; fixed so that the summation order, and hence
/// the result, does not depend on the thread count.
const CHUNK: usize = 32;

/// Ensemble average of `n_traj` trajectories. Trajectory `k` uses stream `k`
/// of the generator seeded with `seed`.
pub fn mcwf_ensemble(
    l: &Liouvillian,
    psi0: &DVector<C64>,
    t_grid: &[f64],
    n_traj: usize,
    seed: u64,
    projection: EnsembleProjection,
    control: StepControl,
) -> Result<(PropagationResult, EnsembleInfo)> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("at least one trajectory is required".into()));
    }
    let out_dim = match projection {
        EnsembleProjection::Full => l.dim(),
        EnsembleProjection::SystemMarginal { n_system } => {
            if n_system == 0 || !l.dim().is_multiple_of(n_system) {
                return Err(Error::InvalidParameter(format!(
                    "system size {n_system} does not divide dimension {}",
                    l.dim()
                )));
            }
            n_system
        }
    };
    let ranges: Vec<_> = (0..n_traj.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n_traj))
        .collect();
    let work = |r: &std::ops::Range<usize>| run_chunk(l, psi0, t_grid, seed, r.clone(), projection, control, out_dim);
    #[cfg(feature = "parallel")]
    let partials: Vec<Result<Partial>> = {
        use rayon::prelude::*;
        ranges.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Result<Partial>> = ranges.iter().map(work).collect();

    let mut sums = vec![DMatrix::zeros(out_dim, out_dim); t_grid.len()];
    let mut jumps = Vec::with_capacity(n_traj);
    let mut stats = StepStats::default();
    for p in partials {
        let p = p?;
        for (s, q) in sums.iter_mut().zip(&p.sums) {
            *s += q;
        }
        jumps.extend(p.jumps);
        stats.merge(&p.stats);
    }
    let inv = C64::new(1.0 / n_traj as f64, 0.0);
    let states = sums
        .into_iter()
        .map(|s| DensityMatrix::from_matrix_unchecked(s * inv))
        .collect();
    Ok((
        PropagationResult {
            times: t_grid.to_vec(),
            states,
            stats,
            validity: None,
        },
        EnsembleInfo {
            seed,
            n_traj,
            jumps_per_trajectory: jumps,
        },
    ))
}
