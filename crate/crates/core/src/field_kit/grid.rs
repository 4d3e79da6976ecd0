use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Largest spatial dimension supported.
pub const MAX_DIM: usize = 2;

/// Uniform tensor grid over a box in ℝⁿ together with a time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub x_lo: [f64; MAX_DIM],
    pub x_hi: [f64; MAX_DIM],
    pub t_max: f64,
    pub cfl: f64,
    counts: [usize; MAX_DIM],
    steps: usize,
}

/// Default CFL constant `1/√n` for the explicit scheme.
pub fn default_cfl(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

fn near_integer(v: f64) -> Option<usize> {
    let r = v.round();
    if r >= 1.0 && (v - r).abs() <= 1e-9 * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// Builds a grid over `bounds` (one `(lo, hi)` pair per axis).
///
/// `cfl` defaults to `1/√n`; it may be lowered but not raised above that.
pub fn make_grid(
    bounds: &[(f64, f64)],
    dx: f64,
    dt: f64,
    t_max: f64,
    cfl: Option<f64>,
) -> Result<Grid> {
    let n = bounds.len();
    if n == 0 || n > MAX_DIM {
        return Err(LabError::Config(format!(
            "spatial dimension must be 1 or 2, got {n}"
        )));
    }
    if !(dx > 0.0 && dx.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
        return Err(LabError::Config(format!(
            "steps must be positive: dx = {dx}, dt = {dt}"
        )));
    }
    if !(t_max > 0.0) {
        return Err(LabError::Config(format!("t_max must be positive, got {t_max}")));
    }
    let cfl = cfl.unwrap_or_else(|| default_cfl(n));
    if !(cfl > 0.0) || cfl > default_cfl(n) + 1e-15 {
        return Err(LabError::Config(format!(
            "cfl = {cfl} must lie in (0, 1/sqrt(n)]"
        )));
    }
    let mut x_lo = [0.0; MAX_DIM];
    let mut x_hi = [0.0; MAX_DIM];
    let mut counts = [1usize; MAX_DIM];
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        if !(hi > lo) {
            return Err(LabError::Config(format!(
                "axis {axis}: empty interval [{lo}, {hi}]"
            )));
        }
        let cells = near_integer((hi - lo) / dx).ok_or_else(|| {
            LabError::Config(format!(
                "axis {axis}: (x_hi - x_lo)/dx = {} is not a positive integer",
                (hi - lo) / dx
            ))
        })?;
        if dt > cfl * dx * (1.0 + 1e-12) {
            return Err(LabError::Cfl {
                axis,
                dt,
                limit: cfl * dx,
            });
        }
        x_lo[axis] = lo;
        x_hi[axis] = hi;
        counts[axis] = cells + 1;
    }
    let steps = near_integer(t_max / dt).ok_or_else(|| {
        LabError::Config(format!("dt = {dt} does not divide t_max = {t_max}"))
    })?;
    Ok(Grid {
        n,
        dx,
        dt,
        x_lo,
        x_hi,
        t_max,
        cfl,
        counts,
        steps,
    })
}

impl Grid {
    /// Node count along `axis` (1 for unused axes).
    pub fn count(&self, axis: usize) -> usize {
        self.counts[axis]
    }

    pub fn node_count(&self) -> usize {
        self.counts[..self.n].iter().product()
    }

    /// Number of time steps to reach `t_max`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.n as i32)
    }

    /// Flat lexicographic index; the first axis varies slowest.
    pub fn flat(&self, idx: [usize; MAX_DIM]) -> usize {
        if self.n == 1 {
            idx[0]
        } else {
            idx[0] * self.counts[1] + idx[1]
        }
    }

    pub fn multi(&self, flat: usize) -> [usize; MAX_DIM] {
        if self.n == 1 {
            [flat, 0]
        } else {
            [flat / self.counts[1], flat % self.counts[1]]
        }
    }

    /// Coordinates of a node; unused axes are zero.
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let m = self.multi(flat);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.n {
            x[a] = self.x_lo[a] + m[a] as f64 * self.dx;
        }
        x
    }

    /// Stride of the flat index along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        if self.n == 2 && axis == 0 {
            self.counts[1]
        } else {
            1
        }
    }

    /// Distance, in nodes, from `flat` to the nearest boundary node.
    pub fn depth(&self, flat: usize) -> usize {
        let m = self.multi(flat);
        (0..self.n)
            .map(|a| m[a].min(self.counts[a] - 1 - m[a]))
            .min()
            .unwrap_or(0)
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        self.depth(flat) == 0
    }

    /// Same grid with a different time step and horizon.
    pub fn with_time(&self, dt: f64, t_max: f64) -> Result<Grid> {
        let bounds: Vec<(f64, f64)> = (0..self.n).map(|a| (self.x_lo[a], self.x_hi[a])).collect();
        make_grid(&bounds, self.dx, dt, t_max, Some(self.cfl))
    }
}
