use serde::Serialize;

use crate::error::{LabError, Result};
use crate::solver::FieldPath;

/// Fewest paths accepted by [`qv_check`].
pub const QV_MIN_PATHS: usize = 100;
/// Default relative tolerance between empirical and predicted variation.
pub const QV_TOL: f64 = 0.05;

/// Monte Carlo comparison of the quadratic variation of `u_t` with its
/// prediction `∫(b₁u_t + b₂u + f)² dt`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QvReport {
    pub paths: usize,
    /// Mean over paths of `Σ_k (d_k ΔW_k)²`, the noise part of `Σ(Δu_t)²`.
    pub empirical: f64,
    /// Mean over paths of `Σ_k d_k² dt`.
    pub theory: f64,
    /// Mean over paths of the raw `Σ(Δu_t)²`, drift included; only when
    /// every step was kept.
    pub raw_increments: Option<f64>,
    /// Standard error of `empirical`.
    pub stderr: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-path `(empirical, theory, raw)` at one node, or cell-volume
/// weighted over the grid when `node` is `None`.
fn path_sums(p: &FieldPath, node: Option<usize>) -> Result<(f64, f64, Option<f64>)> {
    let d = p.diffusion.as_ref().ok_or_else(|| {
        LabError::Precondition("quadratic variation needs recorded diffusion samples".into())
    })?;
    let grid = *p.snapshots[0].grid();
    let dt = p.brownian.dt;
    let (nodes, weight): (Vec<usize>, f64) = match node {
        Some(k) if k < grid.node_count() => (vec![k], 1.0),
        Some(k) => return Err(LabError::Precondition(format!("node {k} is outside the grid"))),
        None => ((0..grid.node_count()).collect(), grid.cell_volume()),
    };
    let (mut emp, mut th) = (0.0, 0.0);
    for (k, step) in d.iter().enumerate() {
        let dw = p.brownian.increments[k];
        for &j in &nodes {
            emp += (step[j] * dw).powi(2);
            th += step[j] * step[j] * dt;
        }
    }
    let raw = (p.stride == 1).then(|| {
        let mut r = 0.0;
        for w in p.snapshots.windows(2) {
            for &j in &nodes {
                r += (w[1].ut[j] - w[0].ut[j]).powi(2);
            }
        }
        r * weight
    });
    Ok((emp * weight, th * weight, raw))
}

pub fn qv_check(paths: &[FieldPath], node: Option<usize>, tolerance: f64) -> Result<QvReport> {
    if paths.len() < QV_MIN_PATHS {
        return Err(LabError::Statistics(format!(
            "quadratic variation check needs at least {QV_MIN_PATHS} paths, got {}",
            paths.len()
        )));
    }
    let sums = paths
        .iter()
        .map(|p| path_sums(p, node))
        .collect::<Result<Vec<_>>>()?;
    let n = sums.len() as f64;
    let empirical = sums.iter().map(|s| s.0).sum::<f64>() / n;
    let theory = sums.iter().map(|s| s.1).sum::<f64>() / n;
    let raw_increments = sums
        .iter()
        .map(|s| s.2)
        .sum::<Option<f64>>()
        .map(|r| r / n);
    let var = sums.iter().map(|s| (s.0 - empirical).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    let diff = (empirical - theory).abs();
    let rel_error = if theory > 0.0 { diff / theory } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(QvReport {
        paths: paths.len(),
        empirical,
        theory,
        raw_increments,
        stderr,
        rel_error,
        tolerance,
        pass: rel_error <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{derive_seed, make_grid, sample_brownian, FnSpec, Grid};
    use crate::solver::{solve, Coef, Coefficients, SolveOptions, WaveState};
    use rayon::prelude::*;

    fn run(grid: &Grid, c: &Coefficients, init: &WaveState, seeds: std::ops::Range<u64>) -> Vec<FieldPath> {
        let opts = SolveOptions { record_diffusion: true, ..Default::default() };
        seeds
            .into_par_iter()
            .map(|i| {
                let path = sample_brownian(derive_seed(77, i), grid.dt, grid.t_max).unwrap();
                solve(init, c, grid, &path, &opts).unwrap()
            })
            .collect()
    }

    fn bump_state(g: &Grid) -> WaveState {
        WaveState::from_fns(g, &FnSpec::SpatialBump { center: vec![0.0], radius: 0.3, power: 4 }, &FnSpec::constant(0.0))
    }

    #[test]
    fn zero_diffusion_gives_zero() {
        let g = make_grid(&[(-1.0, 1.0)], 0.05, 0.025, 0.25, None).unwrap();
        let r = qv_check(&run(&g, &Coefficients::zero(), &bump_state(&g), 0..100), None, QV_TOL).unwrap();
        assert_eq!((r.empirical, r.theory), (0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn too_few_paths() {
        let g = make_grid(&[(-1.0, 1.0)], 0.05, 0.025, 0.25, None).unwrap();
        let paths = run(&g, &Coefficients::zero(), &bump_state(&g), 0..10);
        assert!(matches!(qv_check(&paths, None, QV_TOL), Err(LabError::Statistics(_))));
    }

    #[test]
    fn frozen_displacement() {
        // b₂ = 1 and a short horizon: u stays near u₀, so QV ≈ T·u₀²
        let g = make_grid(&[(-1.0, 1.0)], 0.02, 0.001, 0.02, None).unwrap();
        let mut c = Coefficients::zero();
        c.b2 = Coef::Const(1.0);
        let init = bump_state(&g);
        let mid = g.node_count() / 2;
        let r = qv_check(&run(&g, &c, &init, 0..200), Some(mid), QV_TOL).unwrap();
        let frozen = g.t_max * init.u[mid].powi(2);
        assert!((r.empirical - frozen).abs() <= 0.1 * frozen, "{r:?}");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn stderr_scales_with_path_count() {
        let g = make_grid(&[(-1.0, 1.0)], 0.05, 0.025, 0.25, None).unwrap();
        let mut c = Coefficients::zero();
        c.b1 = Coef::Const(0.5);
        c.b2 = Coef::Const(1.0);
        let init = bump_state(&g);
        let all = run(&g, &c, &init, 0..400);
        let a = qv_check(&all[..200], None, QV_TOL).unwrap();
        let b = qv_check(&all, None, QV_TOL).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((1.2..=1.8).contains(&ratio), "{ratio}");
        assert!(b.pass, "{b:?}");
        assert!(b.raw_increments.is_some());
    }
}
