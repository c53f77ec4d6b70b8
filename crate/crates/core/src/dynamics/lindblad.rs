//! The Lindblad generator `rho -> -i[H, rho] + sum_a (L rho L^+ - {L^+L, rho}/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::integrator::OdeSystem;
use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

enum Jump {
    /// At most one entry per row and column: `(row, col, value)`.
    Monomial(Vec<(usize, usize, C64)>),
    General(OperatorMatrix),
}

/// Precomputed generator. Density matrices are handled as column-major
/// slices of length `dim^2`.
pub struct Liouvillian {
    dim: usize,
    hamiltonian: OperatorMatrix,
    /// `-iH - (1/2) sum L^+ L`; also the no-jump generator of quantum trajectories.
    effective: OperatorMatrix,
    lindblad: Vec<OperatorMatrix>,
    jumps: Vec<Jump>,
}

impl Liouvillian {
    pub fn new(hamiltonian: &OperatorMatrix, lindblad: &[OperatorMatrix]) -> Result<Self> {
        let dim = hamiltonian.dim();
        for l in lindblad {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: l.dim(),
                });
            }
        }
        let mut effective = hamiltonian.scale(C64::new(0.0, -1.0));
        for l in lindblad {
            let ldl = l.adjoint().matmul(l)?;
            effective = effective.add(&ldl.scale(C64::new(-0.5, 0.0)))?;
        }
        let jumps = lindblad
            .iter()
            .map(|l| match l.as_monomial() {
                Some(entries) => Jump::Monomial(entries),
                None => Jump::General(l.clone()),
            })
            .collect();
        Ok(Self {
            dim,
            hamiltonian: hamiltonian.clone(),
            effective,
            lindblad: lindblad.to_vec(),
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn lindblad_operators(&self) -> &[OperatorMatrix] {
        &self.lindblad
    }

    /// `-i H_eff` with `H_eff = H - (i/2) sum L^+ L`.
    pub fn effective_generator(&self) -> &OperatorMatrix {
        &self.effective
    }

    /// Writes the generator applied to a Hermitian `rho` into `out`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        debug_assert_eq!(rho.len(), n * n);
        debug_assert_eq!(out.len(), n * n);

        // B = K rho, column by column
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if n >= 128 {
                out.par_chunks_mut(n)
                    .zip(rho.par_chunks(n))
                    .for_each(|(o, r)| self.effective.mul_vec(r, o));
            } else {
                for (o, r) in out.chunks_mut(n).zip(rho.chunks(n)) {
                    self.effective.mul_vec(r, o);
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        for (o, r) in out.chunks_mut(n).zip(rho.chunks(n)) {
            self.effective.mul_vec(r, o);
        }

        // out = B + B^+, valid because rho is Hermitian
        for c in 0..n {
            for r in 0..c {
                let a = out[r + c * n];
                let b = out[c + r * n];
                out[r + c * n] = a + b.conj();
                out[c + r * n] = b + a.conj();
            }
            let d = out[c + c * n];
            out[c + c * n] = C64::new(2.0 * d.re, 0.0);
        }

        for jump in &self.jumps {
            match jump {
                Jump::Monomial(entries) => {
                    for &(rl, cl, vl) in entries {
                        let col_out = rl * n;
                        let col_in = cl * n;
                        let vl = vl.conj();
                        for &(rk, ck, vk) in entries {
                            out[rk + col_out] += vk * vl * rho[ck + col_in];
                        }
                    }
                }
                Jump::General(l) => {
                    // T = L rho, then out += T L^+ = (L T^+)^+
                    let mut t = vec![C64::new(0.0, 0.0); n * n];
                    for (o, r) in t.chunks_mut(n).zip(rho.chunks(n)) {
                        l.mul_vec(r, o);
                    }
                    let mut t_adj = vec![C64::new(0.0, 0.0); n * n];
                    for c in 0..n {
                        for r in 0..n {
                            t_adj[r + c * n] = t[c + r * n].conj();
                        }
                    }
                    let mut col = vec![C64::new(0.0, 0.0); n];
                    for c in 0..n {
                        l.mul_vec(&t_adj[c * n..(c + 1) * n], &mut col);
                        for (r, v) in col.iter().enumerate() {
                            out[c + r * n] += v.conj();
                        }
                    }
                }
            }
        }
    }

    pub fn apply_matrix(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if rho.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.apply(rho.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

impl OdeSystem for Liouvillian {
    fn dim(&self) -> usize {
        self.dim * self.dim
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.apply(y, dy);
    }
}

/// `-i[H, rho] + sum_a (L_a rho L_a^+ - {L_a^+ L_a, rho}/2)` for a Hermitian `rho`.
pub fn lindblad_rhs(
    hamiltonian: &OperatorMatrix,
    lindblad: &[OperatorMatrix],
    rho: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    Liouvillian::new(hamiltonian, lindblad)?.apply_matrix(rho)
}

/// Column-major vectorisation of the generator as a dense matrix,
/// `vec(A rho B) = (B^T (x) A) vec(rho)`.
pub fn vectorized_generator(hamiltonian: &OperatorMatrix, lindblad: &[OperatorMatrix]) -> DMatrix<C64> {
    let n = hamiltonian.dim();
    let id = DMatrix::<C64>::identity(n, n);
    let h = hamiltonian.to_dense();
    let minus_i = C64::new(0.0, -1.0);
    let mut gen = id.kronecker(&h) * minus_i - h.transpose().kronecker(&id) * minus_i;
    for l in lindblad {
        let l = l.to_dense();
        let ldl = l.adjoint() * &l;
        gen += l.conjugate().kronecker(&l);
        gen -= id.kronecker(&ldl) * C64::new(0.5, 0.0);
        gen -= ldl.transpose().kronecker(&id) * C64::new(0.5, 0.0);
    }
    gen
}
