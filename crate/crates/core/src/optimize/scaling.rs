use serde::{Deserialize, Serialize};

use super::objective::{Backend, LatticeSpec, Numerics, Scenario};
use crate::error::{Error, Result};
use crate::model::{LaserParams, PhysConstants};
use crate::observables::{fidelity, trace_distance_fidelity, TargetKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub backend: Backend,
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub f_d: Vec<f64>,
    /// Trajectory count when the ensemble backend ran.
    pub n_traj: Option<usize>,
    pub wall_seconds: f64,
}

/// Fixed lasers and lattice shared by every system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub params: LaserParams,
    pub d: f64,
    pub delta: f64,
    #[serde(default)]
    pub constants: PhysConstants,
    pub target: TargetKind,
}

/// Evaluates each system size with one environment atom per system atom.
pub fn scaling_study(
    spec: &ScalingSpec,
    sizes: &[usize],
    times: &[f64],
    numerics: &Numerics,
) -> Result<Vec<ScalingRow>> {
    if let Some(&n) = sizes.iter().find(|&&n| !(2..=6).contains(&n)) {
        return Err(Error::InvalidParameter(format!("system sizes must lie in 2..=6, got {n}")));
    }
    // fail fast before any expensive size runs
    for &n in sizes {
        numerics.resolve(n)?;
    }
    sizes
        .iter()
        .map(|&n| {
            let clock = std::time::Instant::now();
            let scenario = Scenario {
                lattice: LatticeSpec::new(n, spec.d, spec.delta),
                constants: spec.constants,
                params: spec.params,
                target: spec.target.clone(),
            };
            let model = scenario.model()?;
            let t = scenario.target_state(&model)?;
            let run = scenario.marginals(times, numerics)?;
            let mut f = Vec::with_capacity(times.len());
            let mut f_d = Vec::with_capacity(times.len());
            for m in &run.marginals {
                f.push(fidelity(m, &t.rho)?);
                f_d.push(trace_distance_fidelity(m, &t.rho)?);
            }
            Ok(ScalingRow {
                n,
                backend: run.backend,
                times: run.times,
                f,
                f_d,
                n_traj: run.ensemble.map(|e| e.n_traj),
                wall_seconds: clock.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(params: LaserParams, kt_over_w: f64) -> ScalingSpec {
        ScalingSpec {
            params,
            d: 5.0,
            delta: 2.0,
            constants: PhysConstants::default(),
            target: TargetKind::Thermal { kt_over_w },
        }
    }

    #[test]
    fn memory_policy_fails_fast() {
        let numerics = Numerics { backend: Backend::MasterEquation, ..Numerics::default() };
        let spec = spec(LaserParams::new(35.0, -1.3, 43.3, -45.8), 12.3);
        let err = scaling_study(&spec, &[2, 5], &[1.0], &numerics).unwrap_err();
        assert!(matches!(err, Error::MemoryPolicy(_)));
    }

    #[test]
    fn sizes_checked() {
        let r = scaling_study(&spec(LaserParams::off(), 1.0), &[7], &[1.0], &Numerics::default());
        assert!(r.is_err());
    }

    #[test]
    fn dimer_row() {
        let spec = spec(LaserParams::new(30.0, -7.3, 48.9, -70.4), 12.3);
        let rows = scaling_study(&spec, &[2], &[1.0, 2.0], &Numerics::default()).unwrap();
        assert_eq!(rows[0].backend, Backend::MasterEquation);
        assert_eq!(rows[0].f_d.len(), 2);
        assert!(rows[0].f_d[0] > 0.98, "{:?}", rows[0]);
    }
}
