use serde::{Deserialize, Serialize};

use super::objective::{evaluate_objective, ObjectiveSpec};
use super::map_indexed;
use crate::error::{Error, Result};
use crate::model::LaserParams;

/// Objective values on a (d, delta) grid. `values[i][j]` belongs to
/// `delta[i]` and `d[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub d: Vec<f64>,
    pub delta: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Diagnostics of failed cells as (i, j, message).
    pub failures: Vec<(usize, usize, String)>,
    pub contours: Vec<Contour>,
}

/// Level set as line segments in (d, delta) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    pub segments: Vec<[(f64, f64); 2]>,
}

pub const CONTOUR_LEVELS: [f64; 2] = [0.99, 0.95];

/// `n` evenly spaced points; a single point sits at the midpoint.
pub fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (range.0 + range.1)],
        _ => (0..n)
            .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if r.0 > 0.0 && r.1 >= r.0 && r.1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} range must be positive and ordered, got {r:?}")))
    }
}

/// Evaluates the objective with fixed lasers over a geometry grid and traces
/// the 0.99 and 0.95 contours.
pub fn robustness_scan(
    spec: &ObjectiveSpec,
    params: &LaserParams,
    d_range: (f64, f64),
    delta_range: (f64, f64),
    grid: (usize, usize),
) -> Result<ScanGrid> {
    check_range("d", d_range)?;
    check_range("delta", delta_range)?;
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::InvalidParameter("scan grid needs at least one point per axis".into()));
    }
    let d = linspace(d_range, grid.0);
    let delta = linspace(delta_range, grid.1);
    let cells = map_indexed(d.len() * delta.len(), |k| {
        let (i, j) = (k / d.len(), k % d.len());
        let mut s = spec.clone();
        s.lattice.d = d[j];
        s.lattice.delta = delta[i];
        evaluate_objective(&s, params)
    });
    let mut values = vec![vec![0.0; d.len()]; delta.len()];
    let mut failures = Vec::new();
    for (k, v) in cells.into_iter().enumerate() {
        let (i, j) = (k / d.len(), k % d.len());
        values[i][j] = v.value;
        if let Some(msg) = v.diagnostic {
            failures.push((i, j, msg));
        }
    }
    let contours = CONTOUR_LEVELS
        .iter()
        .map(|&level| Contour { level, segments: contour_segments(&d, &delta, &values, level) })
        .collect();
    Ok(ScanGrid { d, delta, values, failures, contours })
}

/// Smallest objective value over an `n`-by-`n` grid covering
/// `center * (1 +- rel)` in both coordinates.
pub fn box_minimum(
    spec: &ObjectiveSpec,
    params: &LaserParams,
    center: (f64, f64),
    rel: f64,
    n: usize,
) -> Result<(f64, ScanGrid)> {
    let grid = robustness_scan(
        spec,
        params,
        (center.0 * (1.0 - rel), center.0 * (1.0 + rel)),
        (center.1 * (1.0 - rel), center.1 * (1.0 + rel)),
        (n, n),
    )?;
    let min = grid.values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok((min, grid))
}

/// Marching squares on a rectilinear grid. Saddle cells are resolved with
/// the cell average.
pub fn contour_segments(x: &[f64], y: &[f64], values: &[Vec<f64>], level: f64) -> Vec<[(f64, f64); 2]> {
    let mut out = Vec::new();
    if x.len() < 2 || y.len() < 2 {
        return out;
    }
    let cross = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        let t = (level - a.2) / (b.2 - a.2);
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };
    for i in 0..y.len() - 1 {
        for j in 0..x.len() - 1 {
            // corners counter-clockwise from the lower left
            let c = [
                (x[j], y[i], values[i][j]),
                (x[j + 1], y[i], values[i][j + 1]),
                (x[j + 1], y[i + 1], values[i + 1][j + 1]),
                (x[j], y[i + 1], values[i + 1][j]),
            ];
            let above: Vec<bool> = c.iter().map(|p| p.2 >= level).collect();
            let mut edges: Vec<(f64, f64)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if above[e] != above[(e + 1) % 4] {
                    edges.push(cross(a, b));
                }
            }
            match edges.len() {
                2 => out.push([edges[0], edges[1]]),
                4 => {
                    // edges are ordered bottom, right, top, left
                    let center_above = c.iter().map(|p| p.2).sum::<f64>() / 4.0 >= level;
                    if center_above == above[0] {
                        out.push([edges[0], edges[1]]);
                        out.push([edges[2], edges[3]]);
                    } else {
                        out.push([edges[3], edges[0]]);
                        out.push([edges[1], edges[2]]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}
