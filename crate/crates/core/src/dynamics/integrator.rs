//! Dormand-Prince 5(4) with the 4th-order continuous extension, acting on flat
//! complex state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Autonomous or time-dependent right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Largest permitted step; `f64::INFINITY` for no limit.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.h_max > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances and maximum step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest accepted scaled error estimate (at most 1).
    pub max_error: f64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.max_error = self.max_error.max(other.max_error);
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Single-trajectory adaptive stepper. After each call to [`Stepper::step`]
/// the solution on `[t_prev, t]` is available through [`Stepper::interpolate`].
pub struct Stepper<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    control: StepControl,
    t: f64,
    t_prev: f64,
    h: f64,
    h_last: f64,
    y: Vec<C64>,
    y_prev: Vec<C64>,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    err_old: f64,
    stats: StepStats,
}

impl<'a, S: OdeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[C64], control: StepControl) -> Result<Self> {
        control.validate()?;
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: y0.len(),
            });
        }
        let zeros = vec![C64::new(0.0, 0.0); n];
        let mut s = Self {
            sys,
            control,
            t: t0,
            t_prev: t0,
            h: 0.0,
            h_last: 0.0,
            y: y0.to_vec(),
            y_prev: y0.to_vec(),
            k: std::array::from_fn(|_| zeros.clone()),
            tmp: zeros,
            err_old: 1e-4,
            stats: StepStats::default(),
        };
        s.restart_derivative();
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Replaces the current state (e.g. after a quantum jump) and restarts
    /// the derivative history at time `t`.
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.t_prev = t;
        self.y.copy_from_slice(y);
        self.y_prev.copy_from_slice(y);
        self.restart_derivative();
        self.err_old = 1e-4;
        let guess = self.initial_step();
        self.h = if self.h_last > 0.0 { self.h_last.min(guess.max(self.h_last * 0.1)) } else { guess };
    }

    fn restart_derivative(&mut self) {
        self.sys.rhs(self.t, &self.y, &mut self.k[0]);
        self.stats.rhs_evals += 1;
    }

    fn scale(&self, a: C64, b: C64) -> f64 {
        self.control.atol + self.control.rtol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in self.y.iter().zip(&self.k[0]) {
            let sc = self.control.atol + self.control.rtol * yi.norm();
            d0 += (yi.norm() / sc).powi(2);
            d1 += (fi.norm() / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.control.h_max);
        // one explicit Euler step to estimate the second derivative
        for ((t, y), f) in self.tmp.iter_mut().zip(&self.y).zip(&self.k[0]) {
            *t = y + f * h0;
        }
        let mut f1 = vec![C64::new(0.0, 0.0); self.y.len()];
        self.sys.rhs(self.t + h0, &self.tmp, &mut f1);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for ((yi, fa), fb) in self.y.iter().zip(&self.k[0]).zip(&f1) {
            let sc = self.control.atol + self.control.rtol * yi.norm();
            d2 += ((fb - fa).norm() / sc).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.control.h_max)
    }

    fn stage(&mut self, h: f64, coeffs: &[(usize, f64)]) {
        let Self { y, k, tmp, .. } = self;
        for (i, out) in tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(j, a) in coeffs {
                acc += k[j][i] * (a * h);
            }
            *out = acc;
        }
    }

    /// Advances by one accepted step.
    pub fn step(&mut self) -> Result<()> {
        const BETA: f64 = 0.04;
        const SAFETY: f64 = 0.9;
        let expo1 = 0.2 - BETA * 0.75;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.control.max_steps {
                return Err(Error::StepBudgetExhausted {
                    time: self.t,
                    max_steps: self.control.max_steps,
                });
            }
            let h = self.h;
            let t = self.t;
            if h.abs() <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow {
                    time: t,
                    step: h,
                    error: self.err_old,
                });
            }
            self.stage(h, &[(0, A21)]);
            self.eval(t + C2 * h, 1);
            self.stage(h, &[(0, A31), (1, A32)]);
            self.eval(t + C3 * h, 2);
            self.stage(h, &[(0, A41), (1, A42), (2, A43)]);
            self.eval(t + C4 * h, 3);
            self.stage(h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            self.eval(t + C5 * h, 4);
            self.stage(h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            self.eval(t + h, 5);
            // fifth-order solution, stored in tmp
            self.stage(h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
            self.eval(t + h, 6);

            let mut acc = 0.0;
            for i in 0..self.y.len() {
                let k = &self.k;
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6
                    + k[6][i] * E7)
                    * h;
                let sc = self.scale(self.y[i], self.tmp[i]);
                acc += (e.norm() / sc).powi(2);
            }
            let err = (acc / self.y.len() as f64).sqrt();
            if !err.is_finite() {
                self.h *= 0.1;
                self.stats.rejected += 1;
                continue;
            }

            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(0.1, 5.0);
                let h_new = (h / fac).min(self.control.h_max);
                self.err_old = err.max(1e-4);
                self.stats.accepted += 1;
                self.stats.max_error = self.stats.max_error.max(err);
                self.t_prev = t;
                self.t = t + h;
                self.h_last = h;
                std::mem::swap(&mut self.y_prev, &mut self.y);
                std::mem::swap(&mut self.y, &mut self.tmp);
                // FSAL: the last stage is the derivative at the new point
                self.k.swap(0, 6);
                self.h = h_new;
                return Ok(());
            }
            let fac = (fac11 / SAFETY).min(5.0);
            self.h = h / fac;
            self.stats.rejected += 1;
        }
    }

    fn eval(&mut self, t: f64, slot: usize) {
        let Self { sys, tmp, k, .. } = self;
        sys.rhs(t, tmp, &mut k[slot]);
        self.stats.rhs_evals += 1;
    }

    /// Dense output at `t` in `[t_prev, t]` of the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [C64]) {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = (t - self.t_prev) / h;
        let theta1 = 1.0 - theta;
        // after the swap k[0] is f(t_new) and k[6] is f(t_prev)
        let f0 = &self.k[6];
        let f1 = &self.k[0];
        for i in 0..out.len() {
            let y0 = self.y_prev[i];
            let y1 = self.y[i];
            let r2 = y1 - y0;
            let r3 = f0[i] * h - r2;
            let r4 = r2 - f1[i] * h - r3;
            let r5 = (f0[i] * D1 + self.k[2][i] * D3 + self.k[3][i] * D4 + self.k[4][i] * D5
                + self.k[5][i] * D6
                + f1[i] * D7)
                * h;
            out[i] = y0 + (r2 + (r3 + (r4 + r5 * theta1) * theta) * theta1) * theta;
        }
    }
}

/// Integrates from `t0` and reports the solution at each requested time via
/// `observe(index, t, y)`. Output times must be non-decreasing and `>= t0`.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    control: StepControl,
    mut observe: F,
) -> Result<StepStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let mut stepper = Stepper::new(sys, t0, y0, control)?;
    let mut buf = vec![C64::new(0.0, 0.0); sys.dim()];
    for (idx, &t) in t_out.iter().enumerate() {
        if t < t0 {
            return Err(Error::InvalidParameter(format!("output time {t} precedes start {t0}")));
        }
        if t == t0 {
            observe(idx, t, y0)?;
            continue;
        }
        while stepper.t() < t {
            stepper.step()?;
        }
        stepper.interpolate(t, &mut buf);
        observe(idx, t, &buf)?;
    }
    Ok(stepper.stats())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        omega: f64,
    }

    impl OdeSystem for Rotation {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(0.0, -self.omega) * y[0];
        }
    }

    struct Decay;

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = -y[0];
            dy[1] = C64::new(t.cos(), 0.0);
        }
    }

    #[test]
    fn phase_rotation_accuracy() {
        let sys = Rotation { omega: 50.0 };
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        integrate(&sys, 0.0, &[C64::new(1.0, 0.0)], &ts, StepControl::default(), |_, t, y| {
            let exact = C64::from_polar(1.0, -50.0 * t);
            assert!((y[0] - exact).norm() < 1e-7, "t = {t}: {}", (y[0] - exact).norm());
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn dense_output_between_steps() {
        let sys = Decay;
        let ts: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
        let stats = integrate(&sys, 0.0, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &ts,
            StepControl::with_tolerances(1e-9, 1e-12), |_, t, y| {
            assert!((y[0].re - (-t).exp()).abs() < 1e-8);
            assert!((y[1].re - t.sin()).abs() < 1e-8);
            Ok(())
        })
        .unwrap();
        // far fewer steps than output points: values come from interpolation
        assert!(stats.accepted < 300);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let sys = Rotation { omega: 1e4 };
        let control = StepControl { max_steps: 10, ..StepControl::default() };
        let err = integrate(&sys, 0.0, &[C64::new(1.0, 0.0)], &[1.0], control, |_, _, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::StepBudgetExhausted { .. }));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let sys = Decay;
        let control = StepControl { rtol: 0.0, ..StepControl::default() };
        assert!(Stepper::new(&sys, 0.0, &[C64::new(1.0, 0.0); 2], control).is_err());
    }
}
