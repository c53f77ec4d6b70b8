//! Nelder-Mead simplex search confined to the unit cube.

/// Stops when the spread of simplex values falls below `f_tol` and the
/// simplex diameter below `x_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexControl {
    pub step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for SimplexControl {
    fn default() -> Self {
        Self {
            step: 0.1,
            f_tol: 1e-7,
            x_tol: 1e-5,
            max_evals: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` from `x0`. Trial points are projected onto [0, 1]^n.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], control: &SimplexControl) -> SimplexResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    let mut simplex = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        // step inward when the start sits on the upper face
        v[i] += if v[i] + control.step <= 1.0 { control.step } else { -control.step };
        clamp_unit(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    for v in &simplex {
        if evals >= control.max_evals {
            break;
        }
        values.push(eval(v, &mut evals));
    }
    if values.len() < simplex.len() {
        let (i, &fv) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one evaluation");
        return SimplexResult { x: simplex[i].clone(), f: fv, evals, converged: false };
    }

    let mut converged = false;
    while evals < control.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= control.f_tol && diameter <= control.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect();
            clamp_unit(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            if evals >= control.max_evals {
                simplex[n] = xr;
                values[n] = fr;
                break;
            }
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        if evals >= control.max_evals {
            break;
        }
        // outside contraction if the reflection helped at all, inside otherwise
        let xc = along(if fr < values[n] { 0.5 } else { -0.5 });
        let fc = eval(&xc, &mut evals);
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            if evals >= control.max_evals {
                break;
            }
            let best = simplex[0].clone();
            for (v, b) in simplex[i].iter_mut().zip(&best) {
                *v = b + 0.5 * (*v - b);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    let (i, &fv) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty simplex");
    SimplexResult { x: simplex[i].clone(), f: fv, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_interior_minimum() {
        let target = [0.3, 0.7, 0.55, 0.2];
        let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let r = minimize(f, &[0.5; 4], &SimplexControl { max_evals: 5000, f_tol: 1e-14, x_tol: 1e-8, ..Default::default() });
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5, "{:?}", r.x);
        }
    }

    #[test]
    fn rosenbrock_scaled_into_cube() {
        // minimum at (1, 1) mapped to (0.75, 0.75) in the cube [-2, 2]^2
        let f = |x: &[f64]| {
            let (a, b) = (4.0 * x[0] - 2.0, 4.0 * x[1] - 2.0);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(f, &[0.2, 0.8], &SimplexControl { max_evals: 4000, f_tol: 1e-16, x_tol: 1e-9, ..Default::default() });
        assert!(r.f < 1e-8, "{r:?}");
        assert!((r.x[0] - 0.75).abs() < 1e-3 && (r.x[1] - 0.75).abs() < 1e-3);
    }

    #[test]
    fn minimum_on_boundary_stays_feasible() {
        let f = |x: &[f64]| x[0] + (x[1] - 0.4).powi(2);
        let r = minimize(f, &[0.9, 0.9], &SimplexControl { max_evals: 3000, ..Default::default() });
        assert!(r.x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(r.x[0] < 1e-4 && (r.x[1] - 0.4).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn budget_is_respected() {
        let mut calls = 0;
        let r = minimize(
            |x: &[f64]| {
                calls += 1;
                x.iter().map(|v| v.sin()).sum()
            },
            &[0.5; 3],
            &SimplexControl { max_evals: 17, ..Default::default() },
        );
        assert_eq!(calls, r.evals);
        assert!(r.evals <= 17);
        let r = minimize(|x: &[f64]| x[0], &[0.5; 3], &SimplexControl { max_evals: 2, ..Default::default() });
        assert_eq!(r.evals, 2);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let f = |x: &[f64]| if x[0] > 0.6 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let r = minimize(f, &[0.3], &SimplexControl { max_evals: 400, ..Default::default() });
        assert!((r.x[0] - 0.5).abs() < 1e-3);
    }
}
