//! Published laser settings and fidelities for the (d, delta) = (5, 2) um
//! lattice, with a regression runner.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Validity, EIGEN_CHECK_MAX_DIM};
use crate::error::Result;
use crate::model::{LaserParams, PhysConstants};
use crate::observables::{fidelity, system_eigensystem, trace_distance_fidelity, TargetKind};
use crate::optimize::{LatticeSpec, Numerics, Scenario};

pub const LATTICE_D: f64 = 5.0;
pub const LATTICE_DELTA: f64 = 2.0;
pub const PREPARATION_TIME: f64 = 1.0;
pub const KT_LOW: f64 = 1.2;
pub const KT_HIGH: f64 = 12.3;

/// Absolute agreement band for quoted values.
pub const BAND: f64 = 0.02;
/// Floor for values quoted as "> 0.999".
pub const ABOVE_FLOOR: f64 = 0.985;
/// Eigenstate population band of the fallback check.
pub const POPULATION_BAND: f64 = 0.03;
/// Output intervals on `[0, PREPARATION_TIME]` at which invariants are checked.
pub const VALIDITY_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quoted {
    Value(f64),
    /// Quoted only as exceeding the given number.
    Above(f64),
}

impl Quoted {
    /// `Value` rows pass within `band`; `Above` rows pass above [`ABOVE_FLOOR`]
    /// (or the quoted bound itself when `band` is zero).
    pub fn matches(&self, ours: f64, band: f64) -> bool {
        match *self {
            Quoted::Value(v) => (ours - v).abs() <= band,
            Quoted::Above(v) if band == 0.0 => ours > v,
            Quoted::Above(_) => ours > ABOVE_FLOOR,
        }
    }

    pub fn nominal(&self) -> f64 {
        match *self {
            Quoted::Value(v) | Quoted::Above(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub index: usize,
    pub n: usize,
    pub target: TargetKind,
    pub params: LaserParams,
    pub f: Quoted,
    pub f_steady: Quoted,
    pub f_d: Quoted,
    pub f_d_steady: Quoted,
}

impl Table1Row {
    pub fn scenario(&self, constants: &PhysConstants) -> Scenario {
        Scenario {
            lattice: LatticeSpec::new(self.n, LATTICE_D, LATTICE_DELTA),
            constants: *constants,
            params: self.params,
            target: self.target.clone(),
        }
    }

    pub fn label(&self) -> String {
        let t = match &self.target {
            TargetKind::BellMinus => "Psi-".to_string(),
            TargetKind::BellPlus => "Psi+".to_string(),
            TargetKind::Thermal { kt_over_w } if *kt_over_w == KT_LOW => "T_L".to_string(),
            TargetKind::Thermal { kt_over_w } if *kt_over_w == KT_HIGH => "T_H".to_string(),
            other => format!("{other:?}"),
        };
        format!("row {} (N={}, {t})", self.index, self.n)
    }
}

/// The eight catalog rows. Laser values in MHz.
pub fn table1() -> Vec<Table1Row> {
    use Quoted::{Above, Value};
    let low = TargetKind::Thermal { kt_over_w: KT_LOW };
    let high = TargetKind::Thermal { kt_over_w: KT_HIGH };
    // (n, target, [Omega_p, Omega_c, Delta_p, Delta_c], F, F~, F_D, F_D~)
    let rows = [
        (2, TargetKind::BellMinus, [7.6, 95.3, -75.8, -44.9], Value(0.999), Value(0.999), Value(0.992), Value(0.998)),
        (2, TargetKind::BellPlus, [8.0, 89.8, 65.3, -7.7], Value(0.999), Value(0.999), Value(0.997), Value(0.998)),
        (2, low.clone(), [19.7, 35.6, -18.1, -4.6], Above(0.999), Above(0.999), Above(0.999), Value(0.999)),
        (2, high.clone(), [30.0, 48.9, -7.3, -70.4], Above(0.999), Above(0.999), Value(0.997), Value(0.997)),
        (3, low.clone(), [9.5, 34.5, -7.5, -71.0], Above(0.999), Above(0.999), Value(0.994), Value(0.992)),
        (3, high.clone(), [27.8, 66.9, -18.3, -33.7], Above(0.999), Above(0.999), Value(0.999), Value(0.999)),
        (4, low, [34.6, 34.9, -34.5, -70.6], Value(0.996), Above(0.999), Value(0.931), Value(0.990)),
        (4, high, [35.0, 43.3, -1.3, -45.8], Above(0.999), Above(0.999), Value(0.994), Value(0.994)),
    ];
    rows.into_iter()
        .enumerate()
        .map(|(i, (n, target, [op, oc, dp, dc], f, f_steady, f_d, f_d_steady))| Table1Row {
            index: i + 1,
            n,
            target,
            params: LaserParams::new(op, dp, oc, dc),
            f,
            f_steady,
            f_d,
            f_d_steady,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub f: f64,
    pub f_d: f64,
    pub f_steady: Option<f64>,
    pub f_d_steady: Option<f64>,
    /// Steady-state system-marginal populations of the system eigenstates.
    pub steady_populations: Option<Vec<f64>>,
    pub target_populations: Vec<f64>,
    /// Worst invariant deviation over the propagated states.
    pub validity: Option<Validity>,
    pub steady_validity: Option<Validity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    pub quoted: Quoted,
    pub ours: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub index: usize,
    pub label: String,
    pub measured: Option<Measured>,
    pub checks: Vec<Check>,
    /// Population fallback, consulted only when a band check fails.
    pub fallback: Option<bool>,
    pub pass: bool,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

/// Recomputes the row's measures at [`PREPARATION_TIME`] and, with
/// `steady`, in the stationary state.
pub fn measure_row(row: &Table1Row, constants: &PhysConstants, numerics: &Numerics, steady: bool) -> Result<Measured> {
    let scenario = row.scenario(constants);
    let model = scenario.model()?;
    let target = scenario.target_state(&model)?;
    let eig = system_eigensystem(&model.system_block())?;
    let grid: Vec<f64> = (0..=VALIDITY_SAMPLES).map(|k| PREPARATION_TIME * k as f64 / VALIDITY_SAMPLES as f64).collect();
    let run = scenario.marginals(&grid, numerics)?;
    let m = run.marginals.last().expect("non-empty grid");
    let mut out = Measured {
        f: fidelity(m, &target.rho)?,
        f_d: trace_distance_fidelity(m, &target.rho)?,
        f_steady: None,
        f_d_steady: None,
        steady_populations: None,
        target_populations: eig.populations(&target.rho),
        validity: run.validity,
        steady_validity: None,
    };
    if steady {
        let (ss, full) = scenario.steady_marginal(numerics)?;
        out.steady_validity = Some(full.rho.validity(full.rho.dim() <= EIGEN_CHECK_MAX_DIM));
        out.f_steady = Some(fidelity(&ss, &target.rho)?);
        out.f_d_steady = Some(trace_distance_fidelity(&ss, &target.rho)?);
        out.steady_populations = Some(eig.populations(&ss));
    }
    Ok(out)
}

/// Compares measured values with a row. A zero `band` demands exact equality.
pub fn compare_row(row: &Table1Row, measured: &Measured, band: f64) -> (Vec<Check>, Option<bool>, bool) {
    let mut checks = Vec::new();
    let mut push = |quantity: &str, quoted: Quoted, ours: Option<f64>| {
        if let Some(ours) = ours {
            checks.push(Check { quantity: quantity.into(), quoted, ours, pass: quoted.matches(ours, band) });
        }
    };
    push("F", row.f, Some(measured.f));
    push("F_D", row.f_d, Some(measured.f_d));
    push("F~", row.f_steady, measured.f_steady);
    push("F_D~", row.f_d_steady, measured.f_d_steady);
    let bands_ok = checks.iter().all(|c| c.pass);
    let fallback = if bands_ok {
        None
    } else {
        measured.steady_populations.as_ref().map(|p| {
            p.iter()
                .zip(&measured.target_populations)
                .all(|(a, b)| (a - b).abs() <= POPULATION_BAND)
        })
    };
    (checks, fallback, bands_ok || fallback == Some(true))
}

/// Runs and compares every row in `rows`. Failures are reported per row.
pub fn table1_regression(rows: &[Table1Row], constants: &PhysConstants, numerics: &Numerics, steady: bool) -> Vec<RowReport> {
    rows.iter()
        .map(|row| {
            let clock = std::time::Instant::now();
            let measured = measure_row(row, constants, numerics, steady);
            let wall_seconds = clock.elapsed().as_secs_f64();
            match measured {
                Ok(m) => {
                    let (checks, fallback, pass) = compare_row(row, &m, BAND);
                    RowReport {
                        index: row.index,
                        label: row.label(),
                        measured: Some(m),
                        checks,
                        fallback,
                        pass,
                        error: None,
                        wall_seconds,
                    }
                }
                Err(e) => RowReport {
                    index: row.index,
                    label: row.label(),
                    measured: None,
                    checks: Vec::new(),
                    fallback: None,
                    pass: false,
                    error: Some(e.to_string()),
                    wall_seconds,
                },
            }
        })
        .collect()
}
