//! Minimal dimer with one environment atom next to system atom 1: the 6 x 6
//! Hamiltonian in four bases, the rotation angle, the resonance condition,
//! and the transformed jump operator.
//!
//! Matrices are real and expressed in units of 2pi MHz, like the fields.
//! Basis orders:
//! - product: `(pi1 g, pi1 e, pi1 r, pi2 g, pi2 e, pi2 r)`
//! - Bell: `(Psi- g, Psi- e, Psi- r, Psi+ g, Psi+ e, Psi+ r)`
//! - pm and theta: `(Psi- g, Psi+ g, Psi- -, Psi+ -, Psi- +, Psi+ +)`
//!
//! with `Psi(-/+) = (pi1 -/+ pi2)/sqrt 2`, `|+> = (e + r)/sqrt 2` and
//! `|-> = (r - e)/sqrt 2`.

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::basis::SpaceSpec;
use crate::error::{Error, Result};
use crate::model::{angular, Couplings, LaserParams, Model, PhysConstants};

pub type Matrix6 = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalModel {
    /// Dipole coupling `W` (MHz).
    pub w: f64,
    /// Rydberg-level shift with the excitation on atom 1 (MHz).
    pub vbar_11: f64,
    /// Rydberg-level shift with the excitation on atom 2 (MHz).
    pub vbar_21: f64,
    /// Decay rate of `|e>` (MHz).
    pub gamma_p: f64,
    pub params: LaserParams,
}

/// Which Bell state the resonance condition targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellTarget {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Probe detuning preparing `Psi+`; negate for `Psi-`.
    pub delta_p: f64,
    /// `omega_c / 2 > w`, under which the manifold ordering assumed by the
    /// condition holds.
    pub ordered: bool,
}

/// `Delta_p = w + sqrt(w^2 + (v_diff/4)^2) + omega_c/2`.
pub fn resonance_detuning(w: f64, v_diff: f64, omega_c: f64) -> Resonance {
    Resonance {
        delta_p: w + w.hypot(v_diff / 4.0) + omega_c / 2.0,
        ordered: omega_c / 2.0 > w,
    }
}

impl MinimalModel {
    pub fn new(w: f64, vbar_11: f64, vbar_21: f64, gamma_p: f64, params: LaserParams) -> Result<Self> {
        if ![w, vbar_11, vbar_21, gamma_p].iter().all(|v| v.is_finite()) || gamma_p < 0.0 {
            return Err(Error::InvalidParameter("couplings must be finite and the decay rate non-negative".into()));
        }
        params.validate()?;
        Ok(Self { w, vbar_11, vbar_21, gamma_p, params })
    }

    /// Couplings for system atoms at distance `d` and one environment atom at
    /// distance `delta` from atom 1; interactions with atom 2 are dropped.
    pub fn adjacent_only(d: f64, delta: f64, constants: &PhysConstants, params: LaserParams) -> Result<Self> {
        constants.validate()?;
        if !(d > 0.0 && delta > 0.0) {
            return Err(Error::InvalidGeometry("distances must be positive".into()));
        }
        Self::new(
            constants.c3 / d.powi(3),
            constants.c4_pr / delta.powi(4),
            constants.c6_sr / delta.powi(6),
            constants.gamma_p,
            params,
        )
    }

    /// Parameters satisfying `Delta_c = V_sum/2` and the resonance condition
    /// for `target`.
    pub fn resonant(
        d: f64,
        delta: f64,
        constants: &PhysConstants,
        omega_p: f64,
        omega_c: f64,
        target: BellTarget,
    ) -> Result<Self> {
        let base = Self::adjacent_only(d, delta, constants, LaserParams::off())?;
        let res = resonance_detuning(base.w, base.v_diff(), omega_c);
        let delta_p = match target {
            BellTarget::Plus => res.delta_p,
            BellTarget::Minus => -res.delta_p,
        };
        Ok(Self {
            params: LaserParams::new(omega_p, delta_p, omega_c, base.v_sum() / 2.0),
            ..base
        })
    }

    pub fn v_diff(&self) -> f64 {
        self.vbar_11 - self.vbar_21
    }

    pub fn v_sum(&self) -> f64 {
        self.vbar_11 + self.vbar_21
    }

    pub fn w_tilde(&self) -> f64 {
        self.w.hypot(self.v_diff() / 4.0)
    }

    /// `tan 2 theta = -V_diff / (4 W)`, principal branch.
    pub fn theta(&self) -> f64 {
        0.5 * (-self.v_diff()).atan2(4.0 * self.w)
    }

    pub fn resonance(&self) -> Resonance {
        resonance_detuning(self.w, self.v_diff(), self.params.omega_c)
    }

    fn check_symmetrizable(&self) -> Result<()> {
        let gap = (self.params.delta_c - self.v_sum() / 2.0).abs();
        if gap > 1e-9 {
            return Err(Error::Precondition(format!(
                "the (e, r) blocks diagonalize only for Delta_c = V_sum/2 (off by {gap:e} MHz)"
            )));
        }
        Ok(())
    }

    pub fn h_product_basis(&self) -> Matrix6 {
        let p = &self.params;
        let (op, oc) = (p.omega_p / 2.0, p.omega_c / 2.0);
        let v11 = self.vbar_11 - p.delta_p - p.delta_c;
        let v21 = self.vbar_21 - p.delta_p - p.delta_c;
        let w = self.w;
        Matrix6::from_row_slice(&[
            0.0, op, 0.0, w, 0.0, 0.0, //
            op, -p.delta_p, oc, 0.0, w, 0.0, //
            0.0, oc, v11, 0.0, 0.0, w, //
            w, 0.0, 0.0, 0.0, op, 0.0, //
            0.0, w, 0.0, op, -p.delta_p, oc, //
            0.0, 0.0, w, 0.0, oc, v21,
        ])
    }

    pub fn h_bell_basis(&self) -> Matrix6 {
        let p = &self.params;
        let (op, oc) = (p.omega_p / 2.0, p.omega_c / 2.0);
        let w = self.w;
        let r = -p.delta_p - p.delta_c + self.v_sum() / 2.0;
        let vd = self.v_diff() / 2.0;
        Matrix6::from_row_slice(&[
            -w, op, 0.0, 0.0, 0.0, 0.0, //
            op, -w - p.delta_p, oc, 0.0, 0.0, 0.0, //
            0.0, oc, -w + r, 0.0, 0.0, vd, //
            0.0, 0.0, 0.0, w, op, 0.0, //
            0.0, 0.0, 0.0, op, w - p.delta_p, oc, //
            0.0, 0.0, vd, 0.0, oc, w + r,
        ])
    }

    pub fn h_pm_basis(&self) -> Result<Matrix6> {
        self.check_symmetrizable()?;
        let p = &self.params;
        let a = p.omega_p / 8f64.sqrt();
        let (w, dp, oc) = (self.w, p.delta_p, p.omega_c / 2.0);
        let v = self.v_diff() / 4.0;
        Ok(Matrix6::from_row_slice(&[
            -w, 0.0, -a, 0.0, a, 0.0, //
            0.0, w, 0.0, -a, 0.0, a, //
            -a, 0.0, -w - dp - oc, v, 0.0, v, //
            0.0, -a, v, w - dp - oc, v, 0.0, //
            a, 0.0, 0.0, v, -w - dp + oc, v, //
            0.0, a, v, 0.0, v, w - dp + oc,
        ]))
    }

    /// The pm-basis Hamiltonian with both `(e, r)` manifold blocks rotated by
    /// `S = [[cos, -sin], [sin, cos]]`.
    pub fn h_theta_basis(&self) -> Result<Matrix6> {
        self.check_symmetrizable()?;
        let p = &self.params;
        let a = p.omega_p / 8f64.sqrt();
        let (w, dp, oc) = (self.w, p.delta_p, p.omega_c / 2.0);
        let v = self.v_diff() / 4.0;
        let wt = self.w_tilde();
        let (s, c) = self.theta().sin_cos();
        let (x, y) = (v * v / wt, w * v / wt);
        Ok(Matrix6::from_row_slice(&[
            -w, 0.0, -a * c, a * s, a * c, -a * s, //
            0.0, w, -a * s, -a * c, a * s, a * c, //
            -a * c, -a * s, -wt - dp - oc, 0.0, -x, y, //
            a * s, -a * c, 0.0, wt - dp - oc, y, x, //
            a * c, a * s, -x, y, -wt - dp + oc, 0.0, //
            -a * s, a * c, y, x, 0.0, wt - dp + oc,
        ]))
    }

    /// The jump operator `sqrt(Gamma_p) |g><e|` in the pm basis and in the
    /// theta-rotated basis.
    pub fn lindblad_transformed(&self) -> (Matrix6, Matrix6) {
        let k = (self.gamma_p / 2.0).sqrt();
        let mut pm = Matrix6::zeros();
        pm[(0, 2)] = -k;
        pm[(0, 4)] = k;
        pm[(1, 3)] = -k;
        pm[(1, 5)] = k;
        let (s, c) = self.theta().sin_cos();
        let mut th = Matrix6::zeros();
        for (j, v) in [-c, s, c, -s].into_iter().enumerate() {
            th[(0, 2 + j)] = k * v;
        }
        for (j, v) in [-s, -c, s, c].into_iter().enumerate() {
            th[(1, 2 + j)] = k * v;
        }
        (pm, th)
    }

    /// The jump operator in the product basis.
    pub fn lindblad_product_basis(&self) -> Matrix6 {
        let k = self.gamma_p.sqrt();
        let mut l = Matrix6::zeros();
        l[(0, 1)] = k;
        l[(3, 4)] = k;
        l
    }

    /// The same system as a two-site, one-environment-atom [`Model`] (rad/us).
    pub fn to_model(&self) -> Result<Model> {
        let space = SpaceSpec::new(2, 1)?;
        let w = angular(self.w);
        let couplings = Couplings {
            dipole: DMatrix::from_row_slice(2, 2, &[0.0, w, w, 0.0]),
            shifts: DMatrix::from_column_slice(2, 1, &[angular(self.vbar_11), angular(self.vbar_21)]),
            env_vdw: DMatrix::zeros(1, 1),
        };
        Model::from_couplings(space, couplings, self.gamma_p)
    }

    /// Unitary evolution from `|Psi-, g>` and `|Psi+, g>` without dissipation.
    pub fn coherent_population_check(&self, t_grid: &[f64]) -> CoherentCheck {
        let h = self.h_product_basis() * std::f64::consts::TAU;
        let eig = h.symmetric_eigen();
        let u = bell_transform();
        let run = |col: usize| -> Vec<f64> {
            let psi0 = u.column(col).into_owned();
            // amplitudes in the eigenbasis
            let c0 = eig.eigenvectors.transpose() * psi0;
            t_grid
                .iter()
                .map(|&t| {
                    let mut amp = num_complex::Complex64::new(0.0, 0.0);
                    for k in 0..6 {
                        let ph = num_complex::Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
                        amp += ph * c0[k] * c0[k];
                    }
                    amp.norm_sqr()
                })
                .collect()
        };
        let minus = run(0);
        let plus = run(3);
        let leak = |p: &[f64]| p.iter().map(|x| 1.0 - x).fold(0.0, f64::max);
        CoherentCheck {
            times: t_grid.to_vec(),
            max_leak_minus: leak(&minus),
            max_leak_plus: leak(&plus),
            survival_minus: minus,
            survival_plus: plus,
        }
    }
}

/// Fidelities of a resonance-condition preparation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationCheck {
    pub params: LaserParams,
    pub time: f64,
    pub f: f64,
    pub f_d: f64,
    pub f_steady: f64,
    pub f_d_steady: f64,
}

/// Chooses the laser parameters from the minimal model, then runs the master
/// equation for two system atoms and one environment atom at `(0, delta)`,
/// with all of that atom's interactions kept, from `|pi_1, g>` up to `time`.
pub fn preparation_check(
    d: f64,
    delta: f64,
    constants: &PhysConstants,
    omega_p: f64,
    omega_c: f64,
    target: BellTarget,
    time: f64,
) -> Result<PreparationCheck> {
    use crate::dynamics::{propagate, steady_state, DensityMatrix, Liouvillian, PropagateOptions, SteadyStateMethod};
    use crate::observables::{fidelity, system_marginal, trace_distance_fidelity, TargetKind};

    let params = MinimalModel::resonant(d, delta, constants, omega_p, omega_c, target)?.params;
    let model = Model::new(&crate::model::Geometry::new(2, 1, d, delta)?, constants)?;
    let l = Liouvillian::new(&model.total_hamiltonian(&params), &model.lindblad_operators())?;
    let kind = match target {
        BellTarget::Plus => TargetKind::BellPlus,
        BellTarget::Minus => TargetKind::BellMinus,
    };
    let goal = kind.realize(&model.system_block(), model.nearest_neighbour_coupling())?.rho;
    let space = model.space();
    let run = propagate(&l, &DensityMatrix::basis(space.dimension(), 0)?, &[time], &PropagateOptions::default())?;
    let at_t = system_marginal(run.states[0].matrix(), &space)?;
    let ss = steady_state(&l, &SteadyStateMethod::default())?;
    let at_inf = system_marginal(ss.rho.matrix(), &space)?;
    Ok(PreparationCheck {
        params,
        time,
        f: fidelity(&at_t, &goal)?,
        f_d: trace_distance_fidelity(&at_t, &goal)?,
        f_steady: fidelity(&at_inf, &goal)?,
        f_d_steady: trace_distance_fidelity(&at_inf, &goal)?,
    })
}

/// Survival probabilities `|<psi0|psi(t)>|^2` of the two Bell ground states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentCheck {
    pub times: Vec<f64>,
    pub survival_minus: Vec<f64>,
    pub survival_plus: Vec<f64>,
    pub max_leak_minus: f64,
    pub max_leak_plus: f64,
}

/// Columns are the Bell-basis vectors in the product basis.
pub fn bell_transform() -> Matrix6 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Matrix6::zeros();
    for x in 0..3 {
        u[(x, x)] = a;
        u[(3 + x, x)] = -a;
        u[(x, 3 + x)] = a;
        u[(3 + x, 3 + x)] = a;
    }
    u
}

/// Columns are the pm-basis vectors in the Bell basis.
pub fn pm_transform() -> Matrix6 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Matrix6::zeros();
    // g states
    u[(0, 0)] = 1.0;
    u[(3, 1)] = 1.0;
    // |-> = (r - e)/sqrt 2 and |+> = (e + r)/sqrt 2 for each Bell state
    for (sys, minus_col, plus_col) in [(0, 2, 4), (3, 3, 5)] {
        u[(sys + 1, minus_col)] = -a;
        u[(sys + 2, minus_col)] = a;
        u[(sys + 1, plus_col)] = a;
        u[(sys + 2, plus_col)] = a;
    }
    u
}

/// `diag(1, 1, S, S)` in the pm basis.
pub fn theta_transform(theta: f64) -> Matrix6 {
    let (s, c) = theta.sin_cos();
    let mut u = Matrix6::identity();
    for b in [2, 4] {
        u[(b, b)] = c;
        u[(b, b + 1)] = -s;
        u[(b + 1, b)] = s;
        u[(b + 1, b + 1)] = c;
    }
    u
}

/// Ascending eigenvalues.
pub fn spectrum(h: &Matrix6) -> [f64; 6] {
    let mut ev: [f64; 6] = h.symmetric_eigenvalues().as_slice().try_into().expect("6 eigenvalues");
    ev.sort_by(f64::total_cmp);
    ev
}
