//! Weighted-norm decay in λ for solutions whose data vanish on `{ρ > 0}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field_kit::{derive_seed, sample_brownian, AnalyticFn, Grid, Point};
use crate::solver::{solve, trapezoid_weight, Coefficients, SolveOptions, WaveState};

#[derive(Clone, Debug)]
pub struct UcpSetup {
    pub grid: Grid,
    pub rho: Arc<dyn AnalyticFn>,
    pub gamma: f64,
    pub u0: Arc<dyn AnalyticFn>,
    pub u1: Arc<dyn AnalyticFn>,
    pub coeffs: Coefficients,
    pub paths: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
    /// Nodes with `ρ(T, x) > margin` make up the leak region.
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayRow {
    pub lambda: f64,
    /// `log E Σ dxⁿ e^{2λ(ψ−1)}(u² + u_t²)` at the final time over `{ρ ≤ margin}`.
    pub log_norm: f64,
    /// Difference quotient of `log_norm` against the previous row.
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UcpReport {
    pub rows: Vec<DecayRow>,
    /// Mean final `Σ dxⁿ(u² + u_t²)` over the leak region relative to the
    /// initial `Σ dxⁿ(u² + u_t²)`.
    pub leak_ratio: f64,
    pub paths: usize,
    /// `log_norm` is nonincreasing in λ.
    pub monotone: bool,
}

fn log_sum_exp(terms: &[(f64, f64)]) -> f64 {
    // terms are (exponent, nonnegative factor)
    let m = terms
        .iter()
        .filter(|(_, f)| *f > 0.0)
        .map(|(e, _)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|(e, f)| f * (e - m).exp()).sum::<f64>().ln()
}

/// `log Σ dxⁿ e^{2λ(ψ−1)}(u² + u_t²)` over nodes with `ρ ≤ margin`, `ψ = e^{γρ}`.
pub fn weighted_log_norm(state: &WaveState, rho: &dyn AnalyticFn, gamma: f64, lambda: f64, margin: f64) -> f64 {
    let g = state.grid();
    let vol = g.cell_volume();
    let terms: Vec<(f64, f64)> = (0..g.node_count())
        .filter_map(|k| {
            let r = rho.value(&Point::new(state.time, &g.coords(k)[..g.n]));
            if r > margin {
                return None;
            }
            let m = state.u[k] * state.u[k] + state.ut[k] * state.ut[k];
            Some((2.0 * lambda * ((gamma * r).exp() - 1.0), vol * trapezoid_weight(g, k) * m))
        })
        .collect();
    log_sum_exp(&terms)
}

fn mass(state: &WaveState, keep: impl Fn(usize) -> bool) -> f64 {
    let g = state.grid();
    (0..g.node_count())
        .filter(|&k| keep(k))
        .map(|k| trapezoid_weight(g, k) * (state.u[k].powi(2) + state.ut[k].powi(2)))
        .sum::<f64>()
        * g.cell_volume()
}

pub fn ucp_decay(setup: &UcpSetup) -> Result<UcpReport> {
    let g = &setup.grid;
    if !(setup.gamma > 0.0) || setup.lambdas.is_empty() || setup.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(LabError::Config("ucp-decay needs gamma > 0 and positive lambdas".into()));
    }
    if setup.paths == 0 {
        return Err(LabError::Statistics("ucp-decay needs at least one path".into()));
    }
    let init = WaveState::from_fns(g, setup.u0.as_ref(), setup.u1.as_ref());
    for k in 0..g.node_count() {
        let x = &g.coords(k)[..g.n];
        if (init.u[k] != 0.0 || init.ut[k] != 0.0) && setup.rho.value(&Point::new(0.0, x)) > 0.0 {
            return Err(LabError::Precondition(format!(
                "initial data nonzero at x = {x:?} where rho > 0"
            )));
        }
    }
    let m0 = mass(&init, |_| true);
    let opts = SolveOptions {
        stride: g.steps().max(1),
        ..Default::default()
    };
    let per_path: Vec<(Vec<f64>, f64)> = (0..setup.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_brownian(derive_seed(setup.seed, i), g.dt, g.t_max)?;
            let fp = solve(&init, &setup.coeffs, g, &path, &opts)?;
            let last = fp.last();
            let logs = setup
                .lambdas
                .iter()
                .map(|&l| weighted_log_norm(last, setup.rho.as_ref(), setup.gamma, l, setup.margin))
                .collect();
            let leak = mass(last, |k| {
                let p = Point::new(last.time, &g.coords(k)[..g.n]);
                setup.rho.value(&p) > setup.margin
            });
            Ok((logs, leak))
        })
        .collect::<Result<_>>()?;
    let n = setup.paths as f64;
    let mut rows: Vec<DecayRow> = Vec::with_capacity(setup.lambdas.len());
    for (i, &lambda) in setup.lambdas.iter().enumerate() {
        let terms: Vec<(f64, f64)> = per_path.iter().map(|p| (p.0[i], 1.0 / n)).collect();
        let log_norm = log_sum_exp(&terms);
        let slope = match rows.last() {
            Some(prev) if log_norm.is_finite() => (log_norm - prev.log_norm) / (lambda - prev.lambda),
            _ => 0.0,
        };
        rows.push(DecayRow { lambda, log_norm, slope });
    }
    let leak = per_path.iter().map(|p| p.1).sum::<f64>() / n;
    let leak_ratio = if m0 > 0.0 { leak / m0 } else { leak };
    let monotone = rows.windows(2).all(|w| {
        w[0].lambda > w[1].lambda || w[1].log_norm <= w[0].log_norm + 1e-12 * w[0].log_norm.abs().max(1.0)
    });
    Ok(UcpReport {
        rows,
        leak_ratio,
        paths: setup.paths,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{make_grid, FnSpec};
    use crate::solver::Coef;

    fn setup(paths: usize) -> UcpSetup {
        let grid = make_grid(&[(-1.0, 1.0)], 0.01, 0.005, 0.3, None).unwrap();
        UcpSetup {
            grid,
            // front at x = 0.25 + t, bump in |x + 0.3| ≤ 0.2
            rho: Arc::new(FnSpec::affine(-0.25, -1.0, &[1.0])),
            gamma: 1.0,
            u0: Arc::new(FnSpec::SpatialBump { center: vec![-0.3], radius: 0.2, power: 4 }),
            u1: Arc::new(FnSpec::constant(0.0)),
            coeffs: Coefficients {
                b1: Coef::Const(0.5),
                ..Coefficients::zero()
            },
            paths,
            seed: 3,
            lambdas: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            margin: 0.03,
        }
    }

    #[test]
    fn decay_is_monotone_and_leak_small() {
        let r = ucp_decay(&setup(8)).unwrap();
        assert!(r.monotone, "{:?}", r.rows);
        assert!(r.leak_ratio <= 1e-6, "{}", r.leak_ratio);
        assert!(r.rows.iter().all(|row| row.log_norm.is_finite()));
        assert!(r.rows[1..].iter().all(|row| row.slope < 0.0));
    }

    #[test]
    fn data_on_positive_side_rejected() {
        let mut s = setup(1);
        s.u0 = Arc::new(FnSpec::SpatialBump { center: vec![0.3], radius: 0.2, power: 4 });
        assert!(matches!(ucp_decay(&s), Err(LabError::Precondition(_))));
    }

    #[test]
    fn log_sum_exp_handles_zero_mass() {
        assert_eq!(log_sum_exp(&[(3.0, 0.0)]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[(700.0, 1.0), (700.0, 1.0)]);
        assert!((v - (700.0 + 2f64.ln())).abs() < 1e-12);
    }
}
