//! Distance functions, the mollified local energy outside the light cone of
//! a support set and the Monte Carlo finite-propagation-speed experiment.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

mod ucp;

pub use ucp::{ucp_decay, weighted_log_norm, DecayRow, UcpReport, UcpSetup};

use crate::error::{LabError, Result};
use crate::field_kit::{derive_seed, sample_brownian, AnalyticFn, Grid};
use crate::solver::{
    energy_density, solve, total_energy, trapezoid_weight, Coefficients, SolveOptions, WaveState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// A closed set `K` given as a finite union of balls and boxes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSet {
    #[serde(default)]
    pub balls: Vec<Ball>,
    #[serde(default)]
    pub boxes: Vec<BoxSet>,
}

impl SupportSet {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        SupportSet {
            balls: vec![Ball {
                center: center.to_vec(),
                radius,
            }],
            boxes: vec![],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.balls.is_empty() && self.boxes.is_empty() {
            return Err(LabError::Config("support set is empty".into()));
        }
        for b in &self.balls {
            if b.center.len() != n || !(b.radius >= 0.0 && b.radius.is_finite()) {
                return Err(LabError::Config(format!("bad ball {b:?} in dimension {n}")));
            }
            if b.center.iter().any(|c| !c.is_finite()) {
                return Err(LabError::Config("ball center must be finite".into()));
            }
        }
        for b in &self.boxes {
            if b.lo.len() != n || b.hi.len() != n {
                return Err(LabError::Config(format!("bad box {b:?} in dimension {n}")));
            }
            if b.lo.iter().zip(&b.hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                return Err(LabError::Config(format!("box {b:?} is empty or unbounded")));
            }
        }
        Ok(())
    }

    /// Whether `x` lies in `K_t = {x : d_K(x) ≤ t}`.
    pub fn in_cone(&self, x: &[f64], t: f64) -> bool {
        distance_to_set(x, self) <= t
    }
}

/// `d_K(x)`: the minimum over components of the exact Euclidean distance.
pub fn distance_to_set(x: &[f64], k: &SupportSet) -> f64 {
    let ball = k.balls.iter().map(|b| {
        let r2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
        (r2.sqrt() - b.radius).max(0.0)
    });
    let boxes = k.boxes.iter().map(|b| {
        x.iter()
            .zip(b.lo.iter().zip(&b.hi))
            .map(|(a, (l, h))| (l - a).max(a - h).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    });
    ball.chain(boxes).fold(f64::INFINITY, f64::min)
}

/// The ramp `ρ_m(s) = s²/(1 + s²)` for `s > 0`, zero otherwise: C¹,
/// nondecreasing, zero exactly on `s ≤ 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mollifier;

impl Mollifier {
    pub fn value(&self, s: f64) -> f64 {
        if s > 0.0 {
            let s2 = s * s;
            s2 / (1.0 + s2)
        } else {
            0.0
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if s > 0.0 {
            let q = 1.0 + s * s;
            2.0 * s / (q * q)
        } else {
            0.0
        }
    }
}

fn node_point(grid: &Grid, k: usize) -> Vec<f64> {
    grid.coords(k)[..grid.n].to_vec()
}

/// `½ Σ dxⁿ ρ_m(d_K(x) − t)(|∇u|² + u_t² + u²)` with trapezoid weights.
pub fn local_energy(state: &WaveState, k: &SupportSet, t: f64, mollifier: &Mollifier) -> f64 {
    let g = state.grid();
    let s: f64 = (0..g.node_count())
        .map(|j| {
            let w = mollifier.value(distance_to_set(&node_point(g, j), k) - t);
            if w == 0.0 {
                0.0
            } else {
                w * trapezoid_weight(g, j) * energy_density(state, j)
            }
        })
        .sum();
    0.5 * g.cell_volume() * s
}

/// Plain energy over nodes with `d_K(x) > t + halo`.
pub fn energy_outside(state: &WaveState, k: &SupportSet, t: f64, halo: f64) -> f64 {
    let g = state.grid();
    let s: f64 = (0..g.node_count())
        .filter(|&j| distance_to_set(&node_point(g, j), k) > t + halo)
        .map(|j| trapezoid_weight(g, j) * energy_density(state, j))
        .sum();
    0.5 * g.cell_volume() * s
}

/// Cells of halo around `K_t` used for the leakage measurement.
pub const HALO_CELLS: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct PropagationSetup {
    pub grid: Grid,
    pub support: SupportSet,
    pub u0: Arc<dyn AnalyticFn>,
    pub u1: Arc<dyn AnalyticFn>,
    pub coeffs: Coefficients,
    pub paths: usize,
    pub seed: u64,
    pub stride: usize,
    pub halo_cells: f64,
}

/// Monte Carlo statistics of the local energy per snapshot time.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    /// Mean of `𝓔(t)` over paths.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean energy outside `K_t` inflated by the halo.
    pub outside_mean: Vec<f64>,
    pub outside_stderr: Vec<f64>,
    /// Total energy of the initial data.
    pub initial_energy: f64,
    pub paths: usize,
    /// `max_t 𝓔(t)/∫₀ᵗ𝓔` for the mean trace, 0 when `𝓔` vanishes.
    pub gronwall_c: f64,
}

impl EnergyTrace {
    /// `max_t outside_mean(t) / initial_energy`
    pub fn max_outside_ratio(&self) -> f64 {
        let m = self.outside_mean.iter().copied().fold(0.0, f64::max);
        if self.initial_energy > 0.0 {
            m / self.initial_energy
        } else {
            m
        }
    }
}

fn mean_stderr(columns: &[Vec<f64>], i: usize) -> (f64, f64) {
    let n = columns.len() as f64;
    let mean = columns.iter().map(|c| c[i]).sum::<f64>() / n;
    if columns.len() < 2 {
        return (mean, 0.0);
    }
    let var = columns.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn gronwall(times: &[f64], e: &[f64]) -> f64 {
    let mut integral = 0.0;
    let mut c: f64 = 0.0;
    for i in 1..times.len() {
        integral += 0.5 * (e[i] + e[i - 1]) * (times[i] - times[i - 1]);
        if integral > 0.0 {
            c = c.max(e[i] / integral);
        }
    }
    c
}

/// Runs `paths` independent paths from data supported in `K` and records
/// the local energy outside the light cone `K_t`.
pub fn run_propagation(setup: &PropagationSetup) -> Result<EnergyTrace> {
    let g = &setup.grid;
    setup.support.validate(g.n)?;
    if !setup.coeffs.f.is_zero() {
        return Err(LabError::Precondition(
            "finite propagation speed is stated for f = 0".into(),
        ));
    }
    if setup.paths == 0 {
        return Err(LabError::Statistics("propagation needs at least one path".into()));
    }
    let init = WaveState::from_fns(g, setup.u0.as_ref(), setup.u1.as_ref());
    for j in 0..g.node_count() {
        let x = node_point(g, j);
        if (init.u[j] != 0.0 || init.ut[j] != 0.0) && distance_to_set(&x, &setup.support) > 0.0 {
            return Err(LabError::Precondition(format!(
                "initial data nonzero at x = {x:?}, outside the support set"
            )));
        }
    }
    let initial_energy = total_energy(&init);
    let halo = setup.halo_cells * g.dx;
    let opts = SolveOptions {
        stride: setup.stride,
        ..Default::default()
    };
    let molli = Mollifier;
    let per_path: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..setup.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_brownian(derive_seed(setup.seed, i), g.dt, g.t_max)?;
            let fp = solve(&init, &setup.coeffs, g, &path, &opts)?;
            let times: Vec<f64> = fp.snapshots.iter().map(|s| s.time).collect();
            let e = fp
                .snapshots
                .iter()
                .map(|s| local_energy(s, &setup.support, s.time, &molli))
                .collect();
            let out = fp
                .snapshots
                .iter()
                .map(|s| energy_outside(s, &setup.support, s.time, halo))
                .collect();
            Ok((times, e, out))
        })
        .collect::<Result<_>>()?;
    let times = per_path[0].0.clone();
    let e: Vec<Vec<f64>> = per_path.iter().map(|p| p.1.clone()).collect();
    let o: Vec<Vec<f64>> = per_path.iter().map(|p| p.2.clone()).collect();
    let (mean, stderr): (Vec<f64>, Vec<f64>) = (0..times.len()).map(|i| mean_stderr(&e, i)).unzip();
    let (outside_mean, outside_stderr): (Vec<f64>, Vec<f64>) =
        (0..times.len()).map(|i| mean_stderr(&o, i)).unzip();
    let gronwall_c = gronwall(&times, &mean);
    Ok(EnergyTrace {
        times,
        mean,
        stderr,
        outside_mean,
        outside_stderr,
        initial_energy,
        paths: setup.paths,
        gronwall_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{make_grid, CounterRng, FnSpec};
    use crate::solver::Coef;

    fn two_sets() -> SupportSet {
        SupportSet {
            balls: vec![Ball { center: vec![0.0, 0.0], radius: 0.2 }],
            boxes: vec![BoxSet { lo: vec![1.0, -0.5], hi: vec![2.0, 0.5] }],
        }
    }

    #[test]
    fn distances() {
        let k = SupportSet::ball(&[0.0], 0.2);
        assert_eq!(distance_to_set(&[0.1], &k), 0.0);
        assert!((distance_to_set(&[0.5], &k) - 0.3).abs() < 1e-15);
        let k2 = two_sets();
        let x = [0.8, 0.0];
        let single = SupportSet::ball(&[0.0, 0.0], 0.2);
        assert!((distance_to_set(&x, &single) - 0.6).abs() < 1e-15);
        assert!((distance_to_set(&x, &k2) - 0.2).abs() < 1e-15);
        assert!((distance_to_set(&[2.3, 0.9], &k2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distance_is_one_lipschitz() {
        let k = two_sets();
        let mut rng = CounterRng::new(4);
        for _ in 0..10_000 {
            let x = [rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
            let y = [rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
            let dxy = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            assert!((distance_to_set(&x, &k) - distance_to_set(&y, &k)).abs() <= dxy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mollifier_conditions() {
        let m = Mollifier;
        assert_eq!(m.value(0.0), 0.0);
        let mut rng = CounterRng::new(8);
        for _ in 0..10_000 {
            let s = rng.uniform(-5.0, 5.0);
            if s > 0.0 {
                assert!(m.value(s) > 0.0);
                assert!(m.derivative(s) >= 0.0);
            } else {
                assert_eq!(m.value(s), 0.0);
            }
            let h = 1e-6;
            let fd = (m.value(s + h) - m.value(s - h)) / (2.0 * h);
            assert!((fd - m.derivative(s)).abs() < 1e-6);
        }
        assert_eq!(m.value(1.0), 0.5);
    }

    #[test]
    fn local_energy_weights() {
        let g = make_grid(&[(-2.0, 2.0)], 0.01, 0.01, 1.0, None).unwrap();
        let k = SupportSet::ball(&[0.0], 0.2);
        let bump = FnSpec::SpatialBump { center: vec![0.0], radius: 0.2, power: 4 };
        let s = WaveState::from_fns(&g, &bump, &FnSpec::constant(0.0));
        // the difference stencil spreads the density one cell beyond K
        assert_eq!(local_energy(&s, &k, 0.02, &Mollifier), 0.0);
        assert!(local_energy(&s, &k, 0.0, &Mollifier) > 0.0);
        assert_eq!(local_energy(&WaveState::zeros(&g), &k, 0.0, &Mollifier), 0.0);
        // a single node with u_t = 1 at d_K − t = 1
        let mut s = WaveState::zeros(&g);
        let j = g.flat([(1.2f64 + 2.0).div_euclid(0.01).round() as usize + 1, 0]);
        s.ut[j] = 1.0;
        let d = distance_to_set(&g.coords(j)[..1], &k);
        let t = d - 1.0;
        let e = local_energy(&s, &k, t, &Mollifier);
        assert!((e - 0.5 * total_energy(&s)).abs() < 1e-15);
    }

    #[test]
    fn cones_are_nested() {
        let k = two_sets();
        let mut rng = CounterRng::new(12);
        for _ in 0..1000 {
            let x = [rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
            let (r, s) = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
            let (r, s) = (r.min(s), r.max(s));
            if k.in_cone(&x, r) {
                assert!(k.in_cone(&x, s));
            }
        }
    }

    fn setup(b1: f64, paths: usize) -> PropagationSetup {
        let g = make_grid(&[(-1.0, 1.0)], 0.005, 0.005, 0.5, None).unwrap();
        let mut coeffs = Coefficients::zero();
        coeffs.b1 = Coef::Const(b1);
        PropagationSetup {
            grid: g,
            support: SupportSet::ball(&[0.0], 0.2),
            u0: Arc::new(FnSpec::SpatialBump { center: vec![0.0], radius: 0.2, power: 4 }),
            u1: Arc::new(FnSpec::constant(0.0)),
            coeffs,
            paths,
            seed: 11,
            stride: 10,
            halo_cells: HALO_CELLS,
        }
    }

    #[test]
    fn zero_data_zero_trace() {
        let mut s = setup(0.5, 3);
        s.u0 = Arc::new(FnSpec::constant(0.0));
        let t = run_propagation(&s).unwrap();
        assert!(t.mean.iter().chain(&t.outside_mean).all(|v| *v == 0.0));
        assert_eq!(t.gronwall_c, 0.0);
    }

    #[test]
    fn dalembert_support() {
        let t = run_propagation(&setup(0.0, 1)).unwrap();
        let fin = t.times.len() - 1;
        assert!((t.times[fin] - 0.5).abs() < 1e-12);
        // energy beyond |x| = 0.75 at t = 0.5: the 0.05 margin exceeds the halo
        assert!(t.outside_mean[fin] <= 1e-8 * t.initial_energy);
    }

    #[test]
    fn noisy_paths_stay_in_cone() {
        let t = run_propagation(&setup(0.5, 200)).unwrap();
        assert!(t.max_outside_ratio() <= 1e-6, "{}", t.max_outside_ratio());
        assert_eq!(t.paths, 200);
    }

    #[test]
    fn data_outside_support_rejected() {
        let mut s = setup(0.0, 1);
        s.support = SupportSet::ball(&[0.0], 0.1);
        assert!(matches!(run_propagation(&s), Err(LabError::Precondition(_))));
        let mut s = setup(0.0, 1);
        s.coeffs.f = Coef::Const(1.0);
        assert!(run_propagation(&s).is_err());
    }
}
