use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, Field, Grid, Point};
use crate::taylor::Taylor;

/// A coefficient of the equation: absent, constant, analytic or sampled
/// (time-independent) on the solver grid.
#[derive(Clone, Debug, Default)]
pub enum Coef {
    #[default]
    Zero,
    Const(f64),
    Func(Arc<dyn AnalyticFn>),
    Samples(Field),
}

impl Coef {
    pub fn func<F: AnalyticFn + 'static>(f: F) -> Self {
        Coef::Func(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coef::Zero) || matches!(self, Coef::Const(c) if *c == 0.0)
    }

    /// Value at node `k` of `grid` at time `t`.
    #[inline]
    pub fn at(&self, grid: &Grid, k: usize, t: f64) -> f64 {
        match self {
            Coef::Zero => 0.0,
            Coef::Const(c) => *c,
            Coef::Func(f) => f.value(&Point::new(t, &grid.coords(k)[..grid.n])),
            Coef::Samples(s) => s[k],
        }
    }

    /// Values at every node at time `t`; `None` for the zero coefficient.
    pub fn sample(&self, grid: &Grid, t: f64) -> Option<Vec<f64>> {
        match self {
            Coef::Zero => None,
            Coef::Const(c) if *c == 0.0 => None,
            Coef::Samples(s) => Some(s.values().to_vec()),
            _ => Some((0..grid.node_count()).map(|k| self.at(grid, k, t)).collect()),
        }
    }

    fn check(&self, grid: &Grid, name: &str) -> Result<()> {
        if let Coef::Samples(s) = self {
            if s.grid() != grid {
                return Err(LabError::Config(format!(
                    "samples of {name} live on a different grid"
                )));
            }
        }
        Ok(())
    }

    /// Expansion at `p` for manufactured forcing; sampled coefficients have
    /// no derivatives.
    fn taylor(&self, like: &Taylor, p: &Point, order: usize) -> Result<Taylor> {
        match self {
            Coef::Zero => Ok(like.constant_like(0.0)),
            Coef::Const(c) => Ok(like.constant_like(*c)),
            Coef::Func(f) => Ok(f.taylor(p, order)),
            Coef::Samples(_) => Err(LabError::Config(
                "manufactured forcing needs analytic coefficients".into(),
            )),
        }
    }
}

/// Coefficients of `du_t − Δu dt = (a₁u_t + a₂·∇u + a₃u + g) dt + (b₁u_t + b₂u + f) dW`.
///
/// `source` is the deterministic drift forcing `g`, zero for the equation
/// itself and used by manufactured-solution checks.
#[derive(Clone, Debug, Default)]
pub struct Coefficients {
    pub a1: Coef,
    pub a2: Vec<Coef>,
    pub a3: Coef,
    pub b1: Coef,
    pub b2: Coef,
    pub f: Coef,
    pub source: Coef,
}

impl Coefficients {
    pub fn zero() -> Self {
        Self::default()
    }

    pub(crate) fn validate(&self, grid: &Grid) -> Result<()> {
        if self.a2.len() > grid.n {
            return Err(LabError::Config(format!(
                "a2 has {} components on a {}-dimensional grid",
                self.a2.len(),
                grid.n
            )));
        }
        for (c, name) in [
            (&self.a1, "a1"),
            (&self.a3, "a3"),
            (&self.b1, "b1"),
            (&self.b2, "b2"),
            (&self.f, "f"),
            (&self.source, "source"),
        ] {
            c.check(grid, name)?;
        }
        for c in &self.a2 {
            c.check(grid, "a2")?;
        }
        Ok(())
    }

    /// True when `b₁ = b₂ = f = 0`.
    pub fn is_deterministic(&self) -> bool {
        self.b1.is_zero() && self.b2.is_zero() && self.f.is_zero()
    }

    /// `sup |b₁|` over the grid nodes at times `0, dt, …, t_max`.
    pub fn b1_sup(&self, grid: &Grid) -> f64 {
        match &self.b1 {
            Coef::Zero => 0.0,
            Coef::Const(c) => c.abs(),
            Coef::Samples(s) => s.max_abs(),
            Coef::Func(_) => (0..=grid.steps())
                .flat_map(|s| {
                    let t = s as f64 * grid.dt;
                    (0..grid.node_count()).map(move |k| (t, k))
                })
                .map(|(t, k)| self.b1.at(grid, k, t).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Drift forcing `g = u_tt − Δu − a₁u_t − a₂·∇u − a₃u` that makes `u`
/// solve the deterministic part of the equation.
#[derive(Clone, Debug)]
pub struct ManufacturedForcing {
    u: Arc<dyn AnalyticFn>,
    a1: Coef,
    a2: Vec<Coef>,
    a3: Coef,
}

pub fn manufactured_forcing(
    u_exact: Arc<dyn AnalyticFn>,
    coeffs: &Coefficients,
) -> Result<ManufacturedForcing> {
    for c in [&coeffs.a1, &coeffs.a3].into_iter().chain(coeffs.a2.iter()) {
        if matches!(c, Coef::Samples(_)) {
            return Err(LabError::Config(
                "manufactured forcing needs analytic coefficients".into(),
            ));
        }
    }
    if u_exact.max_order() < 2 {
        return Err(LabError::Capability {
            what: "manufactured forcing".into(),
            needed: 2,
            available: u_exact.max_order(),
        });
    }
    Ok(ManufacturedForcing {
        u: u_exact,
        a1: coeffs.a1.clone(),
        a2: coeffs.a2.clone(),
        a3: coeffs.a3.clone(),
    })
}

impl ManufacturedForcing {
    fn expand(&self, p: &Point, order: usize) -> Result<Taylor> {
        let u = self.u.taylor(p, order + 2);
        let ut = u.dt();
        let mut g = ut.dt() - u.laplacian();
        g -= self.a1.taylor(&ut, p, order)? * ut;
        g -= self.a3.taylor(&ut, p, order)? * u.truncate(order);
        for (j, c) in self.a2.iter().enumerate() {
            let d = u.deriv(j + 1);
            g -= c.taylor(&d, p, order)? * d;
        }
        Ok(g)
    }
}

impl AnalyticFn for ManufacturedForcing {
    fn taylor(&self, p: &Point, order: usize) -> Taylor {
        self.expand(p, order)
            .expect("coefficients validated at construction")
    }

    fn max_order(&self) -> usize {
        self.u.max_order().saturating_sub(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{FnSpec, Monomial};

    fn t_squared() -> Arc<dyn AnalyticFn> {
        Arc::new(FnSpec::Polynomial {
            terms: vec![Monomial { coef: 1.0, t: 2, x: vec![0] }],
        })
    }

    #[test]
    fn free_wave_has_zero_forcing() {
        let u = Arc::new(FnSpec::sin(FnSpec::affine(0.0, -1.0, &[1.0])));
        let g = manufactured_forcing(u, &Coefficients::zero()).unwrap();
        for &(t, x) in &[(0.0, 0.3), (0.7, -0.2), (1.3, 2.0)] {
            assert!(g.value(&Point::new(t, &[x])).abs() < 1e-15);
        }
    }

    #[test]
    fn t_squared_forcing() {
        let mut c = Coefficients::zero();
        c.a1 = Coef::Const(0.7);
        c.a3 = Coef::Const(-1.5);
        let g = manufactured_forcing(t_squared(), &c).unwrap();
        let t = 0.8;
        let expected = 2.0 - 0.7 * 2.0 * t + 1.5 * t * t;
        assert!((g.value(&Point::new(t, &[0.4])) - expected).abs() < 1e-14);
    }

    #[test]
    fn a3_shift_is_linear() {
        let u: Arc<dyn AnalyticFn> = Arc::new(FnSpec::exp(FnSpec::affine(0.1, 0.5, &[0.3])));
        let g0 = manufactured_forcing(u.clone(), &Coefficients::zero()).unwrap();
        let mut c = Coefficients::zero();
        c.a3 = Coef::Const(2.0);
        let g1 = manufactured_forcing(u.clone(), &c).unwrap();
        let p = Point::new(0.2, &[0.6]);
        assert_eq!(g1.value(&p), g0.value(&p) - 2.0 * u.value(&p));
    }

    #[test]
    fn sampled_coefficients_rejected() {
        let grid = crate::field_kit::make_grid(&[(0.0, 1.0)], 0.5, 0.25, 1.0, None).unwrap();
        let mut c = Coefficients::zero();
        c.a1 = Coef::Samples(Field::zeros(&grid));
        assert!(manufactured_forcing(t_squared(), &c).is_err());
    }
}
