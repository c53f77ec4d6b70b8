//! WebAssembly bindings for the browser demo in `www/`. Every export takes
//! plain numbers and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rydres_core::analytic::{BellTarget, MinimalModel};
use rydres_core::catalog;
use rydres_core::observables::{fidelity, system_eigensystem, trace_distance_fidelity, TargetKind};
use rydres_core::optimize::{LatticeSpec, Numerics, Scenario};
use rydres_core::{LaserParams, PhysConstants, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Preparation {
    pub times: Vec<f64>,
    /// Eigenstate populations, lowest energy first.
    pub p_phi: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub f_d: Vec<f64>,
    pub f_steady: f64,
    pub f_d_steady: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub params: LaserParams,
    pub w: f64,
    pub w_tilde: f64,
    pub theta: f64,
    pub ordered: bool,
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub label: String,
    pub target: String,
    pub kt_over_w: Option<f64>,
    pub params: LaserParams,
}

/// Parses "bell_minus", "bell_plus" or "thermal".
pub fn target_kind(name: &str, kt_over_w: f64) -> Option<TargetKind> {
    match name {
        "bell_minus" => Some(TargetKind::BellMinus),
        "bell_plus" => Some(TargetKind::BellPlus),
        "thermal" => Some(TargetKind::Thermal { kt_over_w }),
        _ => None,
    }
}

/// Dimer with two environment atoms, started in `|pi_1, g g>`.
pub fn preparation(target: TargetKind, params: LaserParams, d: f64, delta: f64, t_end: f64, n_steps: usize) -> Result<Preparation> {
    let scenario = Scenario {
        lattice: LatticeSpec::new(2, d, delta),
        constants: PhysConstants::default(),
        params,
        target,
    };
    let model = scenario.model()?;
    let goal = scenario.target_state(&model)?.rho;
    let eig = system_eigensystem(&model.system_block())?;
    let steps = n_steps.max(1);
    let grid: Vec<f64> = (0..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
    let numerics = Numerics::default();
    let run = scenario.marginals(&grid, &numerics)?;
    let mut out = Preparation {
        times: run.times,
        p_phi: Vec::new(),
        f: Vec::new(),
        f_d: Vec::new(),
        f_steady: 0.0,
        f_d_steady: 0.0,
    };
    for m in &run.marginals {
        out.p_phi.push(eig.populations(m));
        out.f.push(fidelity(m, &goal)?);
        out.f_d.push(trace_distance_fidelity(m, &goal)?);
    }
    let (ss, _) = scenario.steady_marginal(&numerics)?;
    out.f_steady = fidelity(&ss, &goal)?;
    out.f_d_steady = trace_distance_fidelity(&ss, &goal)?;
    Ok(out)
}

/// Laser settings meeting the resonance condition, with the coherent survival
/// of the targeted Bell state over `[0, t_end]`.
pub fn resonance(d: f64, delta: f64, omega_p: f64, omega_c: f64, plus: bool, t_end: f64) -> Result<ResonanceReport> {
    let target = if plus { BellTarget::Plus } else { BellTarget::Minus };
    let m = MinimalModel::resonant(d, delta, &PhysConstants::default(), omega_p, omega_c, target)?;
    let times: Vec<f64> = (0..=200).map(|k| t_end * k as f64 / 200.0).collect();
    let check = m.coherent_population_check(&times);
    Ok(ResonanceReport {
        params: m.params,
        w: m.w,
        w_tilde: m.w_tilde(),
        theta: m.theta(),
        ordered: m.resonance().ordered,
        times,
        survival: if plus { check.survival_plus } else { check.survival_minus },
    })
}

/// Catalog rows for two system atoms.
pub fn presets() -> Vec<Preset> {
    catalog::table1()
        .into_iter()
        .filter(|r| r.n == 2)
        .map(|r| {
            let (target, kt_over_w) = match r.target {
                TargetKind::BellMinus => ("bell_minus", None),
                TargetKind::BellPlus => ("bell_plus", None),
                TargetKind::Thermal { kt_over_w } => ("thermal", Some(kt_over_w)),
                _ => ("bell_minus", None),
            };
            Preset { label: r.label(), target: target.into(), kt_over_w, params: r.params }
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> std::result::Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = prepareDimer)]
#[allow(clippy::too_many_arguments)]
pub fn prepare_dimer(
    target: &str,
    kt_over_w: f64,
    omega_p: f64,
    delta_p: f64,
    omega_c: f64,
    delta_c: f64,
    d: f64,
    delta: f64,
    t_end: f64,
) -> std::result::Result<String, JsError> {
    let kind = target_kind(target, kt_over_w).ok_or_else(|| JsError::new(&format!("unknown target {target}")))?;
    let params = LaserParams::new(omega_p, delta_p, omega_c, delta_c);
    let p = preparation(kind, params, d, delta, t_end, 200).map_err(|e| JsError::new(&e.to_string()))?;
    to_json(&p)
}

#[wasm_bindgen(js_name = resonanceCondition)]
pub fn resonance_condition(d: f64, delta: f64, omega_p: f64, omega_c: f64, plus: bool, t_end: f64) -> std::result::Result<String, JsError> {
    to_json(&resonance(d, delta, omega_p, omega_c, plus, t_end).map_err(|e| JsError::new(&e.to_string()))?)
}

#[wasm_bindgen(js_name = catalogPresets)]
pub fn catalog_presets() -> std::result::Result<String, JsError> {
    to_json(&presets())
}
