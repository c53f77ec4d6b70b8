//! Run configuration. Frequencies in MHz, distances in um, times in us.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use rydres_core::analytic::BellTarget;
use rydres_core::dynamics::SteadyStateMethod;
use rydres_core::observables::TargetKind;
use rydres_core::optimize::{Backend, Bounds, Evaluation, LatticeSpec, Measure, Numerics, OptimizeOptions};
use rydres_core::{LaserParams, PhysConstants};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Prepare,
    Optimize,
    Scan,
    Scaling,
    Trajectory,
    AnalyticCheck,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Prepare => "prepare",
            Self::Optimize => "optimize",
            Self::Scan => "scan",
            Self::Scaling => "scaling",
            Self::Trajectory => "trajectory",
            Self::AnalyticCheck => "analytic-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    pub geometry: GeometryConfig,
    pub constants: PhysConstants,
    pub lasers: LasersConfig,
    pub target: TargetKind,
    pub numerics: NumericsConfig,
    pub optimize: OptimizeConfig,
    pub scan: ScanConfig,
    pub scaling: ScalingConfig,
    pub trajectory: TrajectoryConfig,
    pub analytic: AnalyticConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            geometry: GeometryConfig::default(),
            constants: PhysConstants::default(),
            lasers: LasersConfig::default(),
            target: TargetKind::BellMinus,
            numerics: NumericsConfig::default(),
            optimize: OptimizeConfig::default(),
            scan: ScanConfig::default(),
            scaling: ScalingConfig::default(),
            trajectory: TrajectoryConfig::default(),
            analytic: AnalyticConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// System atoms.
    pub n: usize,
    /// Environment atoms; defaults to `n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub d: f64,
    pub delta: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { n: 2, m: None, d: 5.0, delta: 2.0 }
    }
}

impl GeometryConfig {
    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec { n: self.n, n_env: self.m, d: self.d, delta: self.delta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LasersConfig {
    pub omega_p: f64,
    pub delta_p: f64,
    pub omega_c: f64,
    pub delta_c: f64,
}

impl Default for LasersConfig {
    fn default() -> Self {
        Self { omega_p: 7.6, delta_p: -75.8, omega_c: 95.3, delta_c: -44.9 }
    }
}

impl LasersConfig {
    pub fn params(&self) -> LaserParams {
        LaserParams::new(self.omega_p, self.delta_p, self.omega_c, self.delta_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Output grid is `n_steps + 1` evenly spaced times on `[0, t_end]`.
    pub t_end: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub n_traj: usize,
    pub allow_dense: bool,
    pub backend: Backend,
    /// Also solve for the stationary state where the scenario supports it.
    pub steady: bool,
    pub steady_method: SteadyStateMethod,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let n = Numerics::default();
        Self {
            rtol: n.rtol,
            atol: n.atol,
            t_end: 1.0,
            n_steps: 100,
            seed: n.seed,
            n_traj: n.n_traj,
            allow_dense: n.allow_dense,
            backend: n.backend,
            steady: true,
            steady_method: n.steady,
        }
    }
}

impl NumericsConfig {
    pub fn numerics(&self) -> Numerics {
        Numerics {
            rtol: self.rtol,
            atol: self.atol,
            steady: self.steady_method,
            backend: self.backend,
            allow_dense: self.allow_dense,
            n_traj: self.n_traj,
            seed: self.seed,
        }
    }

    pub fn t_grid(&self) -> Vec<f64> {
        if self.n_steps == 0 {
            return vec![self.t_end];
        }
        (0..=self.n_steps).map(|k| self.t_end * k as f64 / self.n_steps as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub evaluation: Evaluation,
    pub measure: Measure,
    /// Lower corner of the (omega_p, delta_p, omega_c, delta_c) box.
    pub lower: [f64; 4],
    pub upper: [f64; 4],
    pub budget: usize,
    pub starts: usize,
    pub step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub evals_per_run: usize,
    pub max_restarts: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        let b = Bounds::default();
        let o = OptimizeOptions::default();
        Self {
            evaluation: Evaluation::At { t: 1.0 },
            measure: Measure::FD,
            lower: b.lower,
            upper: b.upper,
            budget: o.budget,
            starts: o.starts,
            step: o.step,
            f_tol: o.f_tol,
            x_tol: o.x_tol,
            evals_per_run: o.evals_per_run,
            max_restarts: o.max_restarts,
        }
    }
}

impl OptimizeConfig {
    pub fn bounds(&self) -> Bounds {
        Bounds { lower: self.lower, upper: self.upper }
    }

    pub fn options(&self, seed: u64) -> OptimizeOptions {
        OptimizeOptions {
            budget: self.budget,
            starts: self.starts,
            seed,
            step: self.step,
            f_tol: self.f_tol,
            x_tol: self.x_tol,
            evals_per_run: self.evals_per_run,
            max_restarts: self.max_restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub d_range: [f64; 2],
    pub delta_range: [f64; 2],
    /// Points along d and along delta.
    pub grid: [usize; 2],
    /// Relative half-width of the box around the configured geometry.
    pub box_rel: f64,
    /// Points per axis inside the box; 0 skips it.
    pub box_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { d_range: [4.0, 6.5], delta_range: [1.5, 3.5], grid: [41, 41], box_rel: 0.05, box_points: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub times: Vec<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { sizes: vec![2, 3, 4, 5, 6], times: vec![1.0, 2.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    /// Trajectories, on generator streams `0..count`.
    pub count: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { count: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticConfig {
    pub target: BellTarget,
    pub omega_p: f64,
    pub omega_c: f64,
    /// Random minimal models drawn for the representation comparison.
    pub draws: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self { target: BellTarget::Plus, omega_p: 7.0, omega_c: 100.0, draws: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Json, Format::Csv] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Parses TOML text, reporting the line and column of the first problem.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_col(text, s.start))
            .map_or((None, None), |(l, c)| (Some(l), Some(c)));
        CliError::Config { message: e.message().to_string(), line, column }
    })
}

pub fn to_toml(config: &RunConfig) -> Result<String, CliError> {
    toml::to_string(config).map_err(|e| CliError::Internal(format!("config echo failed: {e}")))
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
