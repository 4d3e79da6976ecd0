use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field_kit::{
    gradient_unchecked, laplacian_unchecked, AnalyticFn, BrownianPath, Field, Grid, Point,
};

use super::coefficients::Coefficients;
use super::state::{FieldPath, WaveState};

/// Relative threshold above which a node next to the boundary counts as
/// reached by the solution.
pub const SUPPORT_REACH_TOL: f64 = 1e-12;
/// Multiplicative-noise guard: `dt ≤ NOISE_GUARD/‖b₁‖²_∞`.
pub const NOISE_GUARD: f64 = 0.1;

/// Values imposed on the boundary ring.
#[derive(Clone, Debug, Default)]
pub enum Boundary {
    /// Homogeneous Dirichlet: the ring stays zero.
    #[default]
    Dirichlet,
    /// Ring values of `u` and `u_t` taken from an exact solution.
    Exact(Arc<dyn AnalyticFn>),
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Keep every `stride`-th state (the final state is always kept).
    pub stride: usize,
    pub boundary: Boundary,
    /// Raise a propagation error once the solution reaches the nodes next
    /// to the ring (Dirichlet only).
    pub support_check: bool,
    pub record_diffusion: bool,
    /// Drop `Δu` from the drift: every node then evolves as a scalar SDE.
    pub suppress_laplacian: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            stride: 1,
            boundary: Boundary::Dirichlet,
            support_check: true,
            record_diffusion: false,
            suppress_laplacian: false,
        }
    }
}

/// Per-step context that does not change along a path.
struct Stepper<'a> {
    coeffs: &'a Coefficients,
    grid: Grid,
    suppress_laplacian: bool,
}

impl Stepper<'_> {
    /// One semi-implicit Euler–Maruyama step; returns the diffusion samples.
    fn advance(&self, s: &WaveState, dw: f64, step: usize, out: &mut WaveState) -> Result<Vec<f64>> {
        let g = &self.grid;
        let c = self.coeffs;
        let t = s.time;
        let dt = g.dt;
        let a1 = c.a1.sample(g, t);
        let a3 = c.a3.sample(g, t);
        let a2: Vec<Option<Vec<f64>>> = c.a2.iter().map(|a| a.sample(g, t)).collect();
        let src = c.source.sample(g, t);
        let b1 = c.b1.sample(g, t);
        let b2 = c.b2.sample(g, t);
        let f = c.f.sample(g, t);
        if let Some(b) = &b1 {
            let sup = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dt * sup * sup > NOISE_GUARD {
                return Err(LabError::Config(format!(
                    "noise guard: dt = {dt} exceeds 0.1/|b1|^2 = {}",
                    NOISE_GUARD / (sup * sup)
                )));
            }
        }
        let n = g.node_count();
        let mut diffusion = vec![0.0; n];
        let get = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(0.0, |v| v[k]);
        for k in 0..n {
            if g.is_boundary(k) {
                continue;
            }
            let (u, ut) = (s.u[k], s.ut[k]);
            let mut drift = get(&a1, k) * ut + get(&a3, k) * u + get(&src, k);
            if !self.suppress_laplacian {
                drift += laplacian_unchecked(&s.u, k);
            }
            for (axis, a) in a2.iter().enumerate() {
                if let Some(a) = a {
                    drift += a[k] * gradient_unchecked(&s.u, axis, k);
                }
            }
            let d = get(&b1, k) * ut + get(&b2, k) * u + get(&f, k);
            diffusion[k] = d;
            let nut = ut + dt * drift + d * dw;
            let nu = u + dt * nut;
            if !nut.is_finite() || !nu.is_finite() {
                return Err(LabError::BlowUp { step });
            }
            out.ut[k] = nut;
            out.u[k] = nu;
        }
        out.time = t + dt;
        Ok(diffusion)
    }
}

fn impose(boundary: &Boundary, s: &mut WaveState) {
    if let Boundary::Exact(f) = boundary {
        let g = *s.grid();
        for k in 0..g.node_count() {
            if g.is_boundary(k) {
                let tay = f.taylor(&Point::new(s.time, &g.coords(k)[..g.n]), 1);
                s.u[k] = tay.value();
                s.ut[k] = tay.d(&[0]);
            }
        }
    } else {
        s.u.zero_boundary();
        s.ut.zero_boundary();
    }
}

/// One step of the scheme:
/// `u_t' = u_t + dt(Δu + a₁u_t + a₂·∇u + a₃u) + (b₁u_t + b₂u + f)ΔW`, then
/// `u' = u + dt·u_t'`, with the boundary ring held at zero.
pub fn step(state: &WaveState, coeffs: &Coefficients, dw: f64, grid: &Grid) -> Result<WaveState> {
    coeffs.validate(grid)?;
    let st = Stepper {
        coeffs,
        grid: *grid,
        suppress_laplacian: false,
    };
    let mut out = state.clone();
    st.advance(state, dw, 0, &mut out)?;
    impose(&Boundary::Dirichlet, &mut out);
    Ok(out)
}

fn reached(s: &WaveState, scale: f64) -> bool {
    let g = s.grid();
    (0..g.node_count())
        .filter(|&k| g.depth(k) == 1)
        .any(|k| s.u[k].abs().max(s.ut[k].abs()) > SUPPORT_REACH_TOL * scale)
}

/// Runs the scheme from `init` over `grid.steps()` steps driven by `path`.
pub fn solve(
    init: &WaveState,
    coeffs: &Coefficients,
    grid: &Grid,
    path: &BrownianPath,
    opts: &SolveOptions,
) -> Result<FieldPath> {
    coeffs.validate(grid)?;
    if init.grid() != grid {
        return Err(LabError::Precondition("initial state lives on a different grid".into()));
    }
    let steps = grid.steps();
    if path.len() < steps || (path.dt - grid.dt).abs() > 1e-12 * grid.dt {
        return Err(LabError::Precondition(format!(
            "Brownian path has {} increments of {}, need {steps} of {}",
            path.len(),
            path.dt,
            grid.dt
        )));
    }
    if opts.stride == 0 {
        return Err(LabError::Config("snapshot stride must be positive".into()));
    }
    let st = Stepper {
        coeffs,
        grid: *grid,
        suppress_laplacian: opts.suppress_laplacian,
    };
    let check = opts.support_check && matches!(opts.boundary, Boundary::Dirichlet);
    let scale = init.u.max_abs().max(init.ut.max_abs());
    let mut cur = init.clone();
    impose(&opts.boundary, &mut cur);
    let mut next = cur.clone();
    let mut snapshots = vec![cur.clone()];
    let mut diffusion = opts.record_diffusion.then(|| Vec::with_capacity(steps));
    for k in 0..steps {
        let d = st.advance(&cur, path.increments[k], k, &mut next)?;
        impose(&opts.boundary, &mut next);
        if check && reached(&next, scale) {
            return Err(LabError::Propagation { step: k + 1 });
        }
        if let Some(rec) = diffusion.as_mut() {
            rec.push(d);
        }
        std::mem::swap(&mut cur, &mut next);
        if (k + 1) % opts.stride == 0 || k + 1 == steps {
            snapshots.push(cur.clone());
        }
    }
    Ok(FieldPath {
        snapshots,
        brownian: path.clone(),
        stride: opts.stride,
        diffusion,
    })
}

/// Deterministic leapfrog `u^{k+1} = 2u^k − u^{k−1} + dt²Δu^k` for the free
/// wave equation, started by `u¹ = u⁰ + dt(u₁ + dtΔu⁰)`. Returns `u` at
/// `t_max` with a zero boundary ring.
pub fn leapfrog(init: &WaveState, grid: &Grid) -> Field {
    let dt2 = grid.dt * grid.dt;
    let n = grid.node_count();
    let mut prev = init.u.clone();
    let mut cur = init.u.clone();
    for k in 0..n {
        if !grid.is_boundary(k) {
            cur[k] = prev[k] + grid.dt * (init.ut[k] + grid.dt * laplacian_unchecked(&prev, k));
        }
    }
    cur.zero_boundary();
    for _ in 1..grid.steps() {
        let mut next = Field::zeros(grid);
        for k in 0..n {
            if !grid.is_boundary(k) {
                next[k] = 2.0 * cur[k] - prev[k] + dt2 * laplacian_unchecked(&cur, k);
            }
        }
        prev = cur;
        cur = next;
    }
    cur
}
