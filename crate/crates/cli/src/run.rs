//! Scenario execution.

use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use rydres_core::analytic::{self, MinimalModel};
use rydres_core::catalog;
use rydres_core::dynamics::{trajectory_on_stream, Liouvillian};
use rydres_core::observables::{
    fidelity, pure_system_marginal, system_eigensystem, trace_distance_fidelity, Eigensystem, TargetState,
};
use rydres_core::optimize::{
    box_minimum, optimize, Backend, robustness_scan, scaling_study, Evaluation, Measure, ObjectiveSpec, ScalingSpec, Scenario,
};

use crate::config::{Format, RunConfig, ScenarioKind};
use crate::error::CliError;
use crate::output::{self, OutputDir, Series};

type C64 = nalgebra::Complex<f64>;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub version: &'static str,
    pub scenario: &'static str,
    pub seed: u64,
    pub wall_seconds: f64,
    pub threads: usize,
    pub csv_schema: u32,
}

/// File name, header, rows.
pub type Table = (&'static str, &'static [&'static str], Vec<Vec<String>>);

/// What a scenario produced: the JSON summary plus CSV tables.
pub struct Outcome {
    pub summary: Value,
    pub tables: Vec<Table>,
}

pub fn run(kind: ScenarioKind, config: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let clock = Instant::now();
    let outcome = match kind {
        ScenarioKind::Prepare => prepare(config)?,
        ScenarioKind::Optimize => optimize_scenario(config)?,
        ScenarioKind::Scan => scan(config)?,
        ScenarioKind::Scaling => scaling(config)?,
        ScenarioKind::Trajectory => trajectory(config)?,
        ScenarioKind::AnalyticCheck => analytic_check(config)?,
    };
    let provenance = Provenance {
        version: env!("CARGO_PKG_VERSION"),
        scenario: kind.name(),
        seed: config.numerics.seed,
        wall_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        csv_schema: output::CSV_SCHEMA_VERSION,
    };
    let record = json!({ "config": config, "summary": outcome.summary, "provenance": provenance });
    if config.output.wants(Format::Csv) {
        for (name, header, rows) in &outcome.tables {
            out.write_csv(name, header, rows)?;
        }
    }
    if config.output.wants(Format::Json) {
        out.write_json("summary.json", &record)?;
        out.write_bytes("config.toml", crate::config::to_toml(config)?.as_bytes())?;
    }
    Ok(record)
}

fn scenario(config: &RunConfig) -> Scenario {
    Scenario {
        lattice: config.geometry.lattice(),
        constants: config.constants,
        params: config.lasers.params(),
        target: config.target.clone(),
    }
}

fn record_marginal(series: &mut Series, t: f64, m: &nalgebra::DMatrix<C64>, eig: &Eigensystem, target: &TargetState) -> Result<(f64, f64), CliError> {
    for (k, p) in eig.populations(m).iter().enumerate() {
        series.push(t, &format!("p_phi_{}", k + 1), *p);
    }
    for k in 0..m.nrows() {
        series.push(t, &format!("p_pi_{}", k + 1), m[(k, k)].re);
    }
    let f = fidelity(m, &target.rho)?;
    let f_d = trace_distance_fidelity(m, &target.rho)?;
    series.push(t, "F", f);
    series.push(t, "F_D", f_d);
    Ok((f, f_d))
}

fn prepare(config: &RunConfig) -> Result<Outcome, CliError> {
    let numerics = config.numerics.numerics();
    let backend = numerics.resolve(config.geometry.n)?;
    let s = scenario(config);
    let model = s.model()?;
    let target = s.target_state(&model)?;
    let eig = system_eigensystem(&model.system_block())?;
    let grid = config.numerics.t_grid();
    let run = s.marginals(&grid, &numerics)?;

    let mut series = Series::default();
    let mut last = (0.0, 0.0);
    for (t, m) in run.times.iter().zip(&run.marginals) {
        last = record_marginal(&mut series, *t, m, &eig, &target)?;
    }
    let steady = if config.numerics.steady && backend == Backend::MasterEquation {
        let (m, ss) = s.steady_marginal(&numerics)?;
        Some(json!({
            "f": fidelity(&m, &target.rho)?,
            "f_d": trace_distance_fidelity(&m, &target.rho)?,
            "populations": eig.populations(&m),
            "residual": ss.residual,
            "time": ss.time,
        }))
    } else {
        None
    };
    let summary = json!({
        "t_final": run.times.last(),
        "f": last.0,
        "f_d": last.1,
        "steady": steady,
        "backend": run.backend,
        "target_populations": eig.populations(&target.rho),
        "eigenenergies_mhz": eig.energies.iter().map(|e| e / std::f64::consts::TAU).collect::<Vec<_>>(),
        "stats": run.stats,
        "validity": run.validity,
        "ensemble": run.ensemble.map(|e| json!({"n_traj": e.n_traj, "seed": e.seed})),
    });
    Ok(Outcome { summary, tables: vec![("timeseries.csv", &output::TIMESERIES_HEADER, series.rows)] })
}

fn objective_spec(config: &RunConfig) -> ObjectiveSpec {
    ObjectiveSpec {
        target: config.target.clone(),
        evaluation: config.optimize.evaluation,
        measure: config.optimize.measure,
        lattice: config.geometry.lattice(),
        constants: config.constants,
        numerics: config.numerics.numerics(),
    }
}

fn optimize_scenario(config: &RunConfig) -> Result<Outcome, CliError> {
    let spec = objective_spec(config);
    let r = optimize(&spec, &config.optimize.bounds(), &config.optimize.options(config.numerics.seed))?;
    let best = rydres_core::optimize::evaluate_objective(&spec, &r.best_params);
    let rows = r
        .trace
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let a = e.params.to_array();
            vec![
                i.to_string(),
                a[0].to_string(),
                a[1].to_string(),
                a[2].to_string(),
                a[3].to_string(),
                e.value.to_string(),
            ]
        })
        .collect();
    let summary = json!({
        "best_params": r.best_params,
        "best_value": r.best_value,
        "best_f": best.f,
        "best_f_d": best.f_d,
        "evaluations": r.evaluations,
        "seed": r.seed,
    });
    Ok(Outcome { summary, tables: vec![("trace.csv", &output::TRACE_HEADER, rows)] })
}

fn scan(config: &RunConfig) -> Result<Outcome, CliError> {
    let mut spec = objective_spec(config);
    spec.evaluation = Evaluation::At { t: config.numerics.t_end };
    spec.measure = Measure::FD;
    let sc = &config.scan;
    let params = config.lasers.params();
    let grid = robustness_scan(
        &spec,
        &params,
        (sc.d_range[0], sc.d_range[1]),
        (sc.delta_range[0], sc.delta_range[1]),
        (sc.grid[0], sc.grid[1]),
    )?;
    let mut rows = Vec::new();
    for (i, delta) in grid.delta.iter().enumerate() {
        for (j, d) in grid.d.iter().enumerate() {
            rows.push(vec![d.to_string(), delta.to_string(), grid.values[i][j].to_string()]);
        }
    }
    let mut contour_rows = Vec::new();
    for c in &grid.contours {
        for (k, [p, q]) in c.segments.iter().enumerate() {
            contour_rows.push(vec![
                c.level.to_string(),
                k.to_string(),
                p.0.to_string(),
                p.1.to_string(),
                q.0.to_string(),
                q.1.to_string(),
            ]);
        }
    }
    let values = grid.values.iter().flatten();
    let box_min = if sc.box_points > 0 {
        let (min, _) = box_minimum(&spec, &params, (config.geometry.d, config.geometry.delta), sc.box_rel, sc.box_points)?;
        Some(min)
    } else {
        None
    };
    let summary = json!({
        "points": [grid.d.len(), grid.delta.len()],
        "min_f_d": values.clone().copied().fold(f64::INFINITY, f64::min),
        "max_f_d": values.copied().fold(f64::NEG_INFINITY, f64::max),
        "box_rel": sc.box_rel,
        "box_min_f_d": box_min,
        "contour_segments": grid.contours.iter().map(|c| json!({"level": c.level, "segments": c.segments.len()})).collect::<Vec<_>>(),
        "failures": grid.failures,
    });
    Ok(Outcome {
        summary,
        tables: vec![("scan.csv", &output::SCAN_HEADER, rows), ("contours.csv", &output::CONTOUR_HEADER, contour_rows)],
    })
}

fn scaling(config: &RunConfig) -> Result<Outcome, CliError> {
    let spec = ScalingSpec {
        params: config.lasers.params(),
        d: config.geometry.d,
        delta: config.geometry.delta,
        constants: config.constants,
        target: config.target.clone(),
    };
    let rows = scaling_study(&spec, &config.scaling.sizes, &config.scaling.times, &config.numerics.numerics())?;
    let mut table = Vec::new();
    for r in &rows {
        for k in 0..r.times.len() {
            table.push(vec![
                r.n.to_string(),
                serde_json::to_value(r.backend).map_err(|e| CliError::Internal(e.to_string()))?.as_str().unwrap_or("").to_string(),
                r.times[k].to_string(),
                r.f[k].to_string(),
                r.f_d[k].to_string(),
            ]);
        }
    }
    Ok(Outcome { summary: json!({ "rows": rows }), tables: vec![("scaling.csv", &output::SCALING_HEADER, table)] })
}

fn trajectory(config: &RunConfig) -> Result<Outcome, CliError> {
    let s = scenario(config);
    let model = s.model()?;
    let target = s.target_state(&model)?;
    let eig = system_eigensystem(&model.system_block())?;
    let space = model.space();
    let l = Liouvillian::new(&model.total_hamiltonian(&s.params), &model.lindblad_operators())?;
    let mut psi0 = DVector::zeros(space.dimension());
    psi0[0] = C64::new(1.0, 0.0);
    let grid = config.numerics.t_grid();
    let control = config.numerics.numerics().control();
    let mut series = Series::default();
    let mut jumps = Vec::new();
    let mut per_traj = Vec::new();
    for k in 0..config.trajectory.count {
        let tr = trajectory_on_stream(&l, &psi0, &grid, config.numerics.seed, k as u64, control)?;
        if k == 0 {
            for (t, psi) in tr.times.iter().zip(&tr.states) {
                let m = pure_system_marginal(psi.as_slice(), &space)?;
                record_marginal(&mut series, *t, &m, &eig, &target)?;
            }
        }
        for j in &tr.jumps {
            jumps.push(vec![k.to_string(), j.time.to_string(), j.channel.to_string()]);
        }
        per_traj.push(json!({ "stream": k, "jump_times": tr.jumps.iter().map(|j| j.time).collect::<Vec<_>>(), "channels": tr.jumps.iter().map(|j| j.channel).collect::<Vec<_>>() }));
    }
    Ok(Outcome {
        summary: json!({ "seed": config.numerics.seed, "trajectories": per_traj }),
        tables: vec![("timeseries.csv", &output::TIMESERIES_HEADER, series.rows), ("jumps.csv", &output::JUMPS_HEADER, jumps)],
    })
}

fn analytic_check(config: &RunConfig) -> Result<Outcome, CliError> {
    let a = &config.analytic;
    let g = &config.geometry;
    let mm = MinimalModel::resonant(g.d, g.delta, &config.constants, a.omega_p, a.omega_c, a.target)?;
    let reps = representation_spread(&mm)?;

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.numerics.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.draws {
        let mut u = || rng.random_range(-100.0..100.0);
        let w = u();
        let (v11, v21) = (u(), u());
        let p = rydres_core::LaserParams::new(u(), u(), u(), (v11 + v21) / 2.0);
        let m = MinimalModel::new(w, v11, v21, rng.random_range(0.0..20.0), p)?;
        worst = worst.max(representation_spread(&m)?);
    }

    let grid = config.numerics.t_grid();
    let coherent = mm.coherent_population_check(&grid);
    let prep = analytic::preparation_check(g.d, g.delta, &config.constants, a.omega_p, a.omega_c, a.target, config.numerics.t_end)?;
    let mut series = Series::default();
    for (k, t) in coherent.times.iter().enumerate() {
        series.push(*t, "survival_minus", coherent.survival_minus[k]);
        series.push(*t, "survival_plus", coherent.survival_plus[k]);
    }
    let summary = json!({
        "w": mm.w,
        "vbar_11": mm.vbar_11,
        "vbar_21": mm.vbar_21,
        "v_diff": mm.v_diff(),
        "v_sum": mm.v_sum(),
        "w_tilde": mm.w_tilde(),
        "theta": mm.theta(),
        "resonance": mm.resonance(),
        "params": mm.params,
        "spectrum_spread": reps,
        "random_draws": a.draws,
        "random_spectrum_spread": worst,
        "max_leak_minus": coherent.max_leak_minus,
        "max_leak_plus": coherent.max_leak_plus,
        "preparation": prep,
    });
    Ok(Outcome { summary, tables: vec![("timeseries.csv", &output::TIMESERIES_HEADER, series.rows)] })
}

/// Largest eigenvalue difference between the four Hamiltonian representations.
fn representation_spread(m: &MinimalModel) -> Result<f64, CliError> {
    let reference = analytic::spectrum(&m.h_product_basis());
    let others = [m.h_bell_basis(), m.h_pm_basis()?, m.h_theta_basis()?];
    Ok(others
        .iter()
        .map(|h| {
            analytic::spectrum(h)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

/// Regression over the built-in catalog, written as `table1.json` and
/// `table1.csv`.
pub fn verify_table1(config: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let clock = Instant::now();
    let rows = catalog::table1();
    let reports = catalog::table1_regression(&rows, &config.constants, &config.numerics.numerics(), config.numerics.steady);
    let mut table = Vec::new();
    for r in &reports {
        for c in &r.checks {
            let above = matches!(c.quoted, catalog::Quoted::Above(_));
            table.push(vec![
                r.index.to_string(),
                c.quantity.clone(),
                c.quoted.nominal().to_string(),
                above.to_string(),
                c.ours.to_string(),
                c.pass.to_string(),
            ]);
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let record = json!({
        "config": config,
        "summary": { "all_pass": all_pass, "band": catalog::BAND, "above_floor": catalog::ABOVE_FLOOR, "rows": reports },
        "provenance": {
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": "table1",
            "seed": config.numerics.seed,
            "wall_seconds": clock.elapsed().as_secs_f64(),
            "threads": rayon::current_num_threads(),
            "csv_schema": output::CSV_SCHEMA_VERSION,
        },
    });
    if config.output.wants(Format::Csv) {
        out.write_csv("table1.csv", &output::TABLE1_HEADER, &table)?;
    }
    if config.output.wants(Format::Json) {
        out.write_json("table1.json", &record)?;
    }
    Ok(record)
}
