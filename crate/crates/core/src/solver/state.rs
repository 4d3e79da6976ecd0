use crate::field_kit::{gradient_unchecked, AnalyticFn, BrownianPath, Field, Grid};

/// Displacement, velocity and time of one solver state.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub u: Field,
    pub ut: Field,
    pub time: f64,
}

impl WaveState {
    pub fn zeros(grid: &Grid) -> Self {
        WaveState {
            u: Field::zeros(grid),
            ut: Field::zeros(grid),
            time: 0.0,
        }
    }

    /// Samples `u₀`, `u₁` with the boundary ring set to zero.
    pub fn from_fns(grid: &Grid, u0: &dyn AnalyticFn, u1: &dyn AnalyticFn) -> Self {
        WaveState {
            u: Field::sample_interior(grid, u0, 0.0),
            ut: Field::sample_interior(grid, u1, 0.0),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `a·self + b·other` (same time).
    pub fn combine(&self, a: f64, other: &WaveState, b: f64) -> WaveState {
        WaveState {
            u: self.u.combine(a, &other.u, b),
            ut: self.ut.combine(a, &other.ut, b),
            time: self.time,
        }
    }
}

/// Snapshots of one path, the Brownian path that drove it and optionally
/// the diffusion `b₁u_t + b₂u + f` at every node before every step.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPath {
    pub snapshots: Vec<WaveState>,
    pub brownian: BrownianPath,
    pub stride: usize,
    pub diffusion: Option<Vec<Vec<f64>>>,
}

impl FieldPath {
    pub fn last(&self) -> &WaveState {
        self.snapshots.last().expect("a path holds the initial state")
    }
}

/// Trapezoid weight of a node: halved once per axis on which it is a boundary node.
pub(crate) fn trapezoid_weight(grid: &Grid, k: usize) -> f64 {
    let m = grid.multi(k);
    let mut w = 1.0;
    for a in 0..grid.n {
        if m[a] == 0 || m[a] + 1 == grid.count(a) {
            w *= 0.5;
        }
    }
    w
}

/// Energy density `|∇u|² + u_t² + u²` at node `k`; the gradient is taken
/// by central differences and dropped on the boundary ring.
pub(crate) fn energy_density(state: &WaveState, k: usize) -> f64 {
    let g = state.grid();
    let mut e = state.ut[k] * state.ut[k] + state.u[k] * state.u[k];
    if !g.is_boundary(k) {
        for a in 0..g.n {
            let d = gradient_unchecked(&state.u, a, k);
            e += d * d;
        }
    }
    e
}

/// `½ Σ (trapezoid) dxⁿ (|∇u|² + u_t² + u²)`
pub fn total_energy(state: &WaveState) -> f64 {
    let g = state.grid();
    let s: f64 = (0..g.node_count())
        .map(|k| trapezoid_weight(g, k) * energy_density(state, k))
        .sum();
    0.5 * g.cell_volume() * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{make_grid, FnSpec};

    #[test]
    fn zero_state_has_zero_energy() {
        let g = make_grid(&[(0.0, 1.0), (0.0, 1.0)], 0.1, 0.05, 1.0, None).unwrap();
        assert_eq!(total_energy(&WaveState::zeros(&g)), 0.0);
    }

    #[test]
    fn unit_velocity_on_unit_square() {
        for bounds in [vec![(0.0, 1.0)], vec![(0.0, 1.0), (0.0, 1.0)]] {
            let g = make_grid(&bounds, 0.125, 0.0625, 1.0, None).unwrap();
            let mut s = WaveState::zeros(&g);
            s.ut = Field::sample(&g, &FnSpec::constant(1.0), 0.0);
            assert!((total_energy(&s) - 0.5).abs() < 1e-15);
        }
    }
}
