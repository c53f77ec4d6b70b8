//! Geometry, interaction constants, and the Hamiltonian and collapse operators
//! of a Rydberg aggregate coupled to laser-driven three-level atoms.
//!
//! External quantities use laboratory units: frequencies in MHz (the value
//! quoted is `omega / 2pi`), distances in micrometres, times in microseconds.
//! Every operator produced here is in angular units, rad/us.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{EnvLevel, SpaceSpec};
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// Converts a frequency in MHz (cycles) to rad/us.
pub fn angular(mhz: f64) -> f64 {
    TAU * mhz
}

/// Atom positions: system atoms on a line with spacing `d`, environment atoms
/// on a parallel copy of that line displaced by `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n_system: usize,
    pub n_env: usize,
    pub d: f64,
    pub delta: f64,
    pub positions_system: Vec<[f64; 2]>,
    pub positions_env: Vec<[f64; 2]>,
}

impl Geometry {
    /// `n_system` system atoms at `(k d, 0)` and `n_env` environment atoms at
    /// `(k d, delta)`.
    pub fn new(n_system: usize, n_env: usize, d: f64, delta: f64) -> Result<Self> {
        SpaceSpec::new(n_system, n_env).map_err(|e| Error::InvalidGeometry(e.to_string()))?;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidGeometry(format!("lattice spacing must be positive, got {d}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidGeometry(format!("offset must be positive, got {delta}")));
        }
        let positions_system = (0..n_system).map(|k| [k as f64 * d, 0.0]).collect();
        let positions_env = (0..n_env).map(|k| [k as f64 * d, delta]).collect();
        Ok(Self {
            n_system,
            n_env,
            d,
            delta,
            positions_system,
            positions_env,
        })
    }

    /// One environment atom per system atom.
    pub fn lattice(n: usize, d: f64, delta: f64) -> Result<Self> {
        Self::new(n, n, d, delta)
    }

    pub fn space(&self) -> SpaceSpec {
        SpaceSpec::new(self.n_system, self.n_env).expect("validated on construction")
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Dispersion coefficients and the decay rate of the intermediate level.
/// All values in MHz times the appropriate power of micrometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysConstants {
    /// Resonant dipole-dipole coefficient, MHz um^3.
    pub c3: f64,
    /// Van der Waals coefficient between environment Rydberg states, MHz um^6.
    pub c6_rr: f64,
    /// Interaction of an environment Rydberg state with a p excitation, MHz um^4.
    pub c4_pr: f64,
    /// Interaction of an environment Rydberg state with an s atom, MHz um^6.
    pub c6_sr: f64,
    /// Spontaneous decay rate of the intermediate level, MHz.
    pub gamma_p: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self {
            c3: 1619.0,
            c6_rr: 530.0,
            c4_pr: -1032.0,
            c6_sr: -87.0,
            gamma_p: 6.1,
        }
    }
}

impl PhysConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c3, self.c6_rr, self.c4_pr, self.c6_sr, self.gamma_p];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("constants must be finite".into()));
        }
        if self.gamma_p < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "decay rate must be non-negative, got {}",
                self.gamma_p
            )));
        }
        Ok(())
    }
}

/// Probe and coupling laser settings in MHz.
///
/// Rabi frequencies are normally non-negative; a negative value is a laser
/// phase of pi and is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams {
    pub omega_p: f64,
    pub delta_p: f64,
    pub omega_c: f64,
    pub delta_c: f64,
}

impl LaserParams {
    pub const fn new(omega_p: f64, delta_p: f64, omega_c: f64, delta_c: f64) -> Self {
        Self {
            omega_p,
            delta_p,
            omega_c,
            delta_c,
        }
    }

    pub fn off() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.omega_p, self.delta_p, self.omega_c, self.delta_c]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("laser parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Pairwise couplings in rad/us.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    /// `W_nm` between system sites, zero on the diagonal.
    pub dipole: DMatrix<f64>,
    /// `Vbar_{n alpha}`: shift of environment atom alpha's Rydberg level when
    /// the excitation sits on system atom n.
    pub shifts: DMatrix<f64>,
    /// `V^(rr)_{alpha beta}`, symmetric, zero on the diagonal.
    pub env_vdw: DMatrix<f64>,
}

impl Couplings {
    pub fn from_geometry(geometry: &Geometry, constants: &PhysConstants) -> Result<Self> {
        constants.validate()?;
        let n = geometry.n_system;
        let m = geometry.n_env;
        let sys = &geometry.positions_system;
        let env = &geometry.positions_env;
        let checked = |r: f64, what: &str| {
            if r > 1e-9 {
                Ok(r)
            } else {
                Err(Error::InvalidGeometry(format!("coincident atoms ({what})")))
            }
        };

        let mut dipole = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let r = checked(distance(sys[a], sys[b]), "system-system")?;
                    dipole[(a, b)] = angular(constants.c3 / r.powi(3));
                }
            }
        }

        let mut pr = DMatrix::zeros(n, m);
        let mut sr = DMatrix::zeros(n, m);
        for a in 0..n {
            for alpha in 0..m {
                let r = checked(distance(sys[a], env[alpha]), "system-environment")?;
                pr[(a, alpha)] = constants.c4_pr / r.powi(4);
                sr[(a, alpha)] = constants.c6_sr / r.powi(6);
            }
        }
        let mut shifts = DMatrix::zeros(n, m);
        for site in 0..n {
            for alpha in 0..m {
                let s_part: f64 = (0..n).filter(|&k| k != site).map(|k| sr[(k, alpha)]).sum();
                shifts[(site, alpha)] = angular(pr[(site, alpha)] + s_part);
            }
        }

        let mut env_vdw = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    let r = checked(distance(env[a], env[b]), "environment-environment")?;
                    env_vdw[(a, b)] = angular(constants.c6_rr / r.powi(6));
                }
            }
        }
        Ok(Self {
            dipole,
            shifts,
            env_vdw,
        })
    }
}

/// Operator factory for one geometry and set of constants.
#[derive(Debug, Clone)]
pub struct Model {
    space: SpaceSpec,
    couplings: Couplings,
    /// Decay rate in rad/us.
    gamma: f64,
}

impl Model {
    pub fn new(geometry: &Geometry, constants: &PhysConstants) -> Result<Self> {
        let couplings = Couplings::from_geometry(geometry, constants)?;
        Ok(Self {
            space: geometry.space(),
            couplings,
            gamma: angular(constants.gamma_p),
        })
    }

    /// Builds a model from explicit couplings (rad/us) and a decay rate in MHz.
    pub fn from_couplings(space: SpaceSpec, couplings: Couplings, gamma_p_mhz: f64) -> Result<Self> {
        let (n, m) = (space.n_system(), space.n_env());
        let shape_ok = couplings.dipole.shape() == (n, n)
            && couplings.shifts.shape() == (n, m)
            && couplings.env_vdw.shape() == (m, m);
        if !shape_ok {
            return Err(Error::InvalidParameter("coupling tables do not match the space".into()));
        }
        if !(gamma_p_mhz.is_finite() && gamma_p_mhz >= 0.0) {
            return Err(Error::InvalidParameter("decay rate must be non-negative".into()));
        }
        Ok(Self {
            space,
            couplings,
            gamma: angular(gamma_p_mhz),
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    /// Decay rate of the intermediate level in rad/us.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Nearest-neighbour dipole coupling `W_12` in rad/us, the energy unit
    /// of thermal targets.
    pub fn nearest_neighbour_coupling(&self) -> f64 {
        self.couplings.dipole[(0, 1)]
    }

    /// The N x N single-excitation Hamiltonian on the system alone.
    pub fn system_block(&self) -> DMatrix<C64> {
        self.couplings.dipole.map(|w| C64::new(w, 0.0))
    }

    fn system_triplets(&self, out: &mut Vec<(usize, usize, C64)>) {
        let env_dim = self.space.env_dimension();
        let n = self.space.n_system();
        for a in 0..n {
            for b in 0..n {
                let w = self.couplings.dipole[(a, b)];
                if a != b && w != 0.0 {
                    for e in 0..env_dim {
                        out.push((a * env_dim + e, b * env_dim + e, C64::new(w, 0.0)));
                    }
                }
            }
        }
    }

    fn laser_triplets(&self, params: &LaserParams, out: &mut Vec<(usize, usize, C64)>) {
        let half_p = C64::new(angular(params.omega_p) / 2.0, 0.0);
        let half_c = C64::new(angular(params.omega_c) / 2.0, 0.0);
        let e_diag = C64::new(-angular(params.delta_p), 0.0);
        let r_diag = C64::new(-angular(params.delta_p + params.delta_c), 0.0);
        for i in 0..self.space.dimension() {
            for alpha in 0..self.space.n_env() {
                let stride = self.space.env_stride(alpha);
                match self.space.env_level_of(i, alpha) {
                    EnvLevel::Ground => {
                        out.push((i + stride, i, half_p));
                        out.push((i, i + stride, half_p.conj()));
                    }
                    EnvLevel::Intermediate => {
                        out.push((i + stride, i, half_c));
                        out.push((i, i + stride, half_c.conj()));
                        out.push((i, i, e_diag));
                    }
                    EnvLevel::Rydberg => out.push((i, i, r_diag)),
                }
            }
        }
    }

    fn env_env_diagonal(&self, i: usize) -> f64 {
        let m = self.space.n_env();
        let mut acc = 0.0;
        for a in 0..m {
            if self.space.env_level_of(i, a) != EnvLevel::Rydberg {
                continue;
            }
            for b in (a + 1)..m {
                if self.space.env_level_of(i, b) == EnvLevel::Rydberg {
                    acc += self.couplings.env_vdw[(a, b)];
                }
            }
        }
        acc
    }

    fn system_env_diagonal(&self, i: usize) -> f64 {
        let site = self.space.site_of(i);
        (0..self.space.n_env())
            .filter(|&a| self.space.env_level_of(i, a) == EnvLevel::Rydberg)
            .map(|a| self.couplings.shifts[(site, a)])
            .sum()
    }

    fn diagonal_op(&self, f: impl Fn(usize) -> f64) -> OperatorMatrix {
        let dim = self.space.dimension();
        OperatorMatrix::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(f(i), 0.0))))
            .expect("diagonal indices are in range")
    }

    /// Excitation hopping `sum_{n != m} W_nm |pi_n><pi_m|` on the full space.
    pub fn system_hamiltonian(&self) -> OperatorMatrix {
        let mut t = Vec::new();
        self.system_triplets(&mut t);
        OperatorMatrix::from_triplets(self.space.dimension(), t).expect("indices in range")
    }

    /// Driving of every environment atom in the rotating frame.
    pub fn laser_hamiltonian(&self, params: &LaserParams) -> OperatorMatrix {
        let mut t = Vec::new();
        self.laser_triplets(params, &mut t);
        OperatorMatrix::from_triplets(self.space.dimension(), t).expect("indices in range")
    }

    /// Van der Waals interaction between environment atoms in |r>.
    pub fn env_env_hamiltonian(&self) -> OperatorMatrix {
        self.diagonal_op(|i| self.env_env_diagonal(i))
    }

    /// State-dependent shift of environment Rydberg levels.
    pub fn system_env_hamiltonian(&self) -> OperatorMatrix {
        self.diagonal_op(|i| self.system_env_diagonal(i))
    }

    pub fn total_hamiltonian(&self, params: &LaserParams) -> OperatorMatrix {
        let mut t = Vec::new();
        self.system_triplets(&mut t);
        self.laser_triplets(params, &mut t);
        for i in 0..self.space.dimension() {
            let d = self.env_env_diagonal(i) + self.system_env_diagonal(i);
            t.push((i, i, C64::new(d, 0.0)));
        }
        OperatorMatrix::from_triplets(self.space.dimension(), t).expect("indices in range")
    }

    /// `L_alpha = sqrt(Gamma) |g><e|_alpha`, one per environment atom.
    pub fn lindblad_operators(&self) -> Vec<OperatorMatrix> {
        let amp = C64::new(self.gamma.sqrt(), 0.0);
        let dim = self.space.dimension();
        (0..self.space.n_env())
            .map(|alpha| {
                let stride = self.space.env_stride(alpha);
                let entries = (0..dim)
                    .filter(|&i| self.space.env_level_of(i, alpha) == EnvLevel::Intermediate)
                    .map(|i| (i - stride, i, amp));
                OperatorMatrix::from_triplets(dim, entries).expect("indices in range")
            })
            .collect()
    }
}

pub fn system_hamiltonian(geometry: &Geometry, constants: &PhysConstants) -> Result<OperatorMatrix> {
    Ok(Model::new(geometry, constants)?.system_hamiltonian())
}

pub fn laser_hamiltonian(space: SpaceSpec, params: &LaserParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let couplings = Couplings {
        dipole: DMatrix::zeros(space.n_system(), space.n_system()),
        shifts: DMatrix::zeros(space.n_system(), space.n_env()),
        env_vdw: DMatrix::zeros(space.n_env(), space.n_env()),
    };
    Ok(Model::from_couplings(space, couplings, 0.0)?.laser_hamiltonian(params))
}

pub fn env_env_hamiltonian(geometry: &Geometry, constants: &PhysConstants) -> Result<OperatorMatrix> {
    Ok(Model::new(geometry, constants)?.env_env_hamiltonian())
}

pub fn system_env_hamiltonian(geometry: &Geometry, constants: &PhysConstants) -> Result<OperatorMatrix> {
    Ok(Model::new(geometry, constants)?.system_env_hamiltonian())
}

pub fn total_hamiltonian(
    geometry: &Geometry,
    constants: &PhysConstants,
    params: &LaserParams,
) -> Result<OperatorMatrix> {
    params.validate()?;
    Ok(Model::new(geometry, constants)?.total_hamiltonian(params))
}

pub fn lindblad_operators(space: SpaceSpec, constants: &PhysConstants) -> Result<Vec<OperatorMatrix>> {
    constants.validate()?;
    let couplings = Couplings {
        dipole: DMatrix::zeros(space.n_system(), space.n_system()),
        shifts: DMatrix::zeros(space.n_system(), space.n_env()),
        env_vdw: DMatrix::zeros(space.n_env(), space.n_env()),
    };
    Ok(Model::from_couplings(space, couplings, constants.gamma_p)?.lindblad_operators())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mhz(op: &OperatorMatrix, r: usize, c: usize) -> f64 {
        op.get(r, c).re / TAU
    }

    fn reference_dimer() -> Geometry {
        Geometry::lattice(2, 5.0, 2.0).unwrap()
    }

    #[test]
    fn geometry_layout() {
        let g = Geometry::lattice(3, 5.0, 2.0).unwrap();
        assert_eq!(g.positions_system[2], [10.0, 0.0]);
        assert_eq!(g.positions_env[1], [5.0, 2.0]);
        assert!(Geometry::lattice(2, 0.0, 2.0).is_err());
        assert!(Geometry::lattice(2, 5.0, -1.0).is_err());
    }

    #[test]
    fn dipole_coupling_values() {
        let c = PhysConstants::default();
        let h = system_hamiltonian(&reference_dimer(), &c).unwrap();
        let s = reference_dimer().space();
        let i = s.ground_index(0);
        let j = s.ground_index(1);
        assert_relative_eq!(mhz(&h, i, j), 12.952, epsilon = 1e-12);
        let close = system_hamiltonian(&Geometry::lattice(2, 2.5, 2.0).unwrap(), &c).unwrap();
        assert_relative_eq!(mhz(&close, i, j), 103.616, epsilon = 1e-9);
    }

    #[test]
    fn all_pairs_dipole() {
        let g = Geometry::lattice(3, 5.0, 2.0).unwrap();
        let m = Model::new(&g, &PhysConstants::default()).unwrap();
        let w = m.couplings().dipole.clone();
        assert_relative_eq!(w[(0, 2)], w[(0, 1)] / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn laser_zero_and_single_entry() {
        let s1 = SpaceSpec::new(2, 1).unwrap();
        assert_eq!(laser_hamiltonian(s1, &LaserParams::off()).unwrap().nnz(), 0);

        let h = laser_hamiltonian(s1, &LaserParams::new(7.6, 0.0, 0.0, 0.0)).unwrap();
        // within one system block: |g> = 0, |e> = 1
        assert_relative_eq!(h.get(1, 0).re, TAU * 3.8, epsilon = 1e-12);
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        assert_eq!(h.nnz(), 4); // one pair per system state
    }

    #[test]
    fn laser_diagonal_sum() {
        let s = SpaceSpec::new(2, 2).unwrap();
        let h = laser_hamiltonian(s, &LaserParams::new(0.0, -75.8, 0.0, -44.9)).unwrap();
        let rr = s.flatten(0, &[EnvLevel::Rydberg, EnvLevel::Rydberg]).unwrap();
        assert_relative_eq!(mhz(&h, rr, rr), 241.4, epsilon = 1e-9);
    }

    #[test]
    fn env_env_values() {
        let c = PhysConstants::default();
        let g1 = Geometry::new(2, 1, 5.0, 2.0).unwrap();
        assert_eq!(env_env_hamiltonian(&g1, &c).unwrap().nnz(), 0);

        let g2 = reference_dimer();
        let m = Model::new(&g2, &c).unwrap();
        assert_relative_eq!(m.couplings().env_vdw[(0, 1)] / TAU, 0.033920, epsilon = 1e-9);
        let h = m.env_env_hamiltonian();
        let s = g2.space();
        let rr = s.flatten(1, &[EnvLevel::Rydberg, EnvLevel::Rydberg]).unwrap();
        assert_relative_eq!(mhz(&h, rr, rr), 0.033920, epsilon = 1e-9);

        let g3 = Geometry::lattice(3, 5.0, 2.0).unwrap();
        let m3 = Model::new(&g3, &c).unwrap();
        assert_relative_eq!(m3.couplings().env_vdw[(0, 2)] / TAU, 0.000530, epsilon = 1e-12);
    }

    #[test]
    fn system_env_shifts() {
        let m = Model::new(&reference_dimer(), &PhysConstants::default()).unwrap();
        let v = &m.couplings().shifts;
        let pr_only = -1032.0 / 16.0;
        assert_relative_eq!(pr_only, -64.5);
        assert_relative_eq!(v[(0, 0)] / TAU, -64.5 - 87.0 / 29f64.powi(3), epsilon = 1e-12);
        assert_relative_eq!(v[(0, 0)] / TAU, -64.5036, epsilon = 1e-4);
        assert_relative_eq!(v[(1, 0)] / TAU, -2.5865, epsilon = 1e-4);
        assert_relative_eq!(v[(1, 0)] / TAU, -1032.0 / 841.0 - 87.0 / 64.0, epsilon = 1e-12);

        let s = m.space();
        let h = m.system_env_hamiltonian();
        let i = s.flatten(1, &[EnvLevel::Rydberg, EnvLevel::Ground]).unwrap();
        assert_relative_eq!(h.get(i, i).re, v[(1, 0)], epsilon = 1e-12);
        assert!(h.is_diagonal());
    }

    #[test]
    fn power_laws_by_doubling() {
        let c = PhysConstants::default();
        let a = Model::new(&Geometry::lattice(2, 5.0, 2.0).unwrap(), &c).unwrap();
        let b = Model::new(&Geometry::lattice(2, 10.0, 4.0).unwrap(), &c).unwrap();
        let ca = a.couplings();
        let cb = b.couplings();
        assert_relative_eq!(cb.dipole[(0, 1)] / ca.dipole[(0, 1)], 1.0 / 8.0, epsilon = 1e-12);
        assert_relative_eq!(cb.env_vdw[(0, 1)] / ca.env_vdw[(0, 1)], 1.0 / 64.0, epsilon = 1e-12);
        // pure C4 part of the adjacent shift, isolated by zeroing C6_sr
        let c4_only = PhysConstants { c6_sr: 0.0, ..c };
        let a4 = Model::new(&Geometry::lattice(2, 5.0, 2.0).unwrap(), &c4_only).unwrap();
        let b4 = Model::new(&Geometry::lattice(2, 10.0, 4.0).unwrap(), &c4_only).unwrap();
        assert_relative_eq!(
            b4.couplings().shifts[(0, 0)] / a4.couplings().shifts[(0, 0)],
            1.0 / 16.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn total_is_hermitian_and_sparse() {
        let g = reference_dimer();
        let h = total_hamiltonian(&g, &PhysConstants::default(), &LaserParams::new(7.6, -75.8, 95.3, -44.9)).unwrap();
        assert_eq!(h.dim(), 18);
        assert!(h.hermiticity_residual() <= 1e-12 * h.max_abs());
        assert!(h.nnz() < 18 * 8);
        assert!(h.max_row_nnz() <= 2 * 2 + 2 + 1);
    }

    #[test]
    fn sparsity_bound_larger() {
        let g = Geometry::lattice(4, 5.0, 2.0).unwrap();
        let h = total_hamiltonian(&g, &PhysConstants::default(), &LaserParams::new(1.0, 2.0, 3.0, 4.0)).unwrap();
        assert!(h.max_row_nnz() <= 2 * 4 + 4 + 1);
        assert!(h.hermiticity_residual() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn lasers_off_ground_block_is_system() {
        let g = Geometry::new(2, 1, 5.0, 2.0).unwrap();
        let c = PhysConstants::default();
        let h = total_hamiltonian(&g, &c, &LaserParams::off()).unwrap();
        let hs = system_hamiltonian(&g, &c).unwrap();
        let s = g.space();
        for a in 0..2 {
            for b in 0..2 {
                let (i, j) = (s.ground_index(a), s.ground_index(b));
                assert_eq!(h.get(i, j), hs.get(i, j));
            }
        }
    }

    #[test]
    fn lindblad_structure() {
        let s1 = SpaceSpec::new(2, 1).unwrap();
        let c = PhysConstants::default();
        let ls = lindblad_operators(s1, &c).unwrap();
        assert_eq!(ls.len(), 1);
        assert_eq!(ls[0].nnz(), 2);

        let s = SpaceSpec::new(3, 2).unwrap();
        let ls = lindblad_operators(s, &c).unwrap();
        let gamma = angular(c.gamma_p);
        for (alpha, l) in ls.iter().enumerate() {
            assert_eq!(l.nnz(), 3 * 3);
            assert_eq!(l.matmul(l).unwrap().nnz(), 0);
            let ldl = l.adjoint().matmul(l).unwrap();
            for i in 0..s.dimension() {
                let expect = if s.env_level_of(i, alpha) == EnvLevel::Intermediate { gamma } else { 0.0 };
                assert_relative_eq!(ldl.get(i, i).re, expect, epsilon = 1e-12);
            }
            assert!(ldl.is_diagonal());
        }
    }
}
