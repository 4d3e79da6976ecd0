use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, Jet2, Point};
use crate::taylor::{Taylor, MAX_ORDER};

/// Parameters `(λ, γ, μ)` and center `(t₀, x₀)` of the weight family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
    pub gamma: f64,
    pub mu: f64,
    pub center: Point,
}

impl WeightParams {
    pub fn new(lambda: f64, gamma: f64, mu: f64, center: Point) -> Result<Self> {
        let p = WeightParams {
            lambda,
            gamma,
            mu,
            center,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.gamma > 0.0) || !(self.mu >= 0.0) {
            return Err(LabError::Config(format!(
                "weights need lambda > 0, gamma > 0, mu >= 0; got ({}, {}, {})",
                self.lambda, self.gamma, self.mu
            )));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Exact expansions behind a frame, valid to the order the inputs allow.
#[derive(Clone, Copy, Debug)]
pub struct FrameExpansions {
    pub rho: Taylor,
    pub varrho: Taylor,
    pub psi: Taylor,
    pub phi: Taylor,
    pub ell: Taylor,
    /// `Ψ = Δℓ − ℓ_tt + 2λγψϱ + 6λμ`
    pub big_psi: Taylor,
}

/// Weights `ψ, φ, ℓ, θ` and their derivatives at one point.
#[derive(Clone, Copy, Debug)]
pub struct CarlemanFrame {
    pub point: Point,
    pub params: WeightParams,
    pub psi: f64,
    pub phi: f64,
    pub ell: f64,
    pub theta: f64,
    pub phi_jet: Jet2,
    pub ell_jet: Jet2,
    pub big_psi: f64,
    pub exp: FrameExpansions,
}

/// A level-set function `ρ`, an auxiliary `ϱ` and weight parameters.
#[derive(Clone, Debug)]
pub struct WeightFamily {
    pub rho: Arc<dyn AnalyticFn>,
    pub varrho: Arc<dyn AnalyticFn>,
    pub params: WeightParams,
}

impl WeightFamily {
    pub fn new(rho: Arc<dyn AnalyticFn>, varrho: Arc<dyn AnalyticFn>, params: WeightParams) -> Self {
        WeightFamily {
            rho,
            varrho,
            params,
        }
    }

    pub fn frame(&self, p: &Point) -> Result<CarlemanFrame> {
        eval_frame(self.rho.as_ref(), self.varrho.as_ref(), p, &self.params)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut f = self.clone();
        f.params.lambda = lambda;
        f
    }
}

/// Largest `ℓ` with `e^ℓ` finite.
pub fn max_exponent() -> f64 {
    f64::MAX.ln()
}

/// Evaluates the weight family at `point`.
///
/// `ψ = e^{γρ}`, `φ = ψ − μ(|x−x₀|² + (t−t₀)²)`, `ℓ = λφ`, `θ = e^ℓ`.
pub fn eval_frame(
    rho: &dyn AnalyticFn,
    varrho: &dyn AnalyticFn,
    point: &Point,
    params: &WeightParams,
) -> Result<CarlemanFrame> {
    let frame = build_frame(rho, varrho, point, params)?;
    if !frame.ell.is_finite() || frame.ell > max_exponent() {
        return Err(LabError::Range {
            lambda_phi: frame.ell,
        });
    }
    Ok(frame)
}

/// Same as [`eval_frame`] but tolerates `θ = ∞`; for quantities that never
/// touch `θ` itself.
pub(crate) fn build_frame(
    rho: &dyn AnalyticFn,
    varrho: &dyn AnalyticFn,
    point: &Point,
    params: &WeightParams,
) -> Result<CarlemanFrame> {
    params.validate()?;
    if point.dim != params.center.dim {
        return Err(LabError::Precondition(format!(
            "point has dimension {}, center has {}",
            point.dim, params.center.dim
        )));
    }
    let order = rho.max_order().min(MAX_ORDER);
    let rho_x = rho.taylor(point, order);
    let varrho_x = varrho.taylor(point, varrho.max_order().min(MAX_ORDER));
    let (t, xs) = point.coordinates(order);
    let WeightParams {
        lambda,
        gamma,
        mu,
        center,
    } = *params;
    let psi = (rho_x * gamma).exp();
    let dt = t - center.t;
    let mut r2 = dt * dt;
    for (a, x) in xs.iter().enumerate() {
        let d = *x - center.x[a];
        r2 += d * d;
    }
    let phi = psi - r2 * mu;
    let ell = phi * lambda;
    let big_psi = if ell.order() >= 2 {
        ell.laplacian() - ell.dt().dt() + psi * varrho_x * (2.0 * lambda * gamma) + 6.0 * lambda * mu
    } else {
        // only the value is meaningful; mark the expansion as exhausted
        ell.dt().dt()
    };
    let ell_v = ell.value();
    let jet = |f: &Taylor| {
        if f.order() >= 2 {
            Jet2::from_taylor(f)
        } else {
            let mut j = Jet2::zero(point.dim);
            j.value = f.value();
            j
        }
    };
    Ok(CarlemanFrame {
        point: *point,
        params: *params,
        psi: psi.value(),
        phi: phi.value(),
        ell: ell_v,
        theta: ell_v.exp(),
        phi_jet: jet(&phi),
        ell_jet: jet(&ell),
        big_psi: if big_psi.order() >= 0 { big_psi.value() } else { f64::NAN },
        exp: FrameExpansions {
            rho: rho_x,
            varrho: varrho_x,
            psi,
            phi,
            ell,
            big_psi,
        },
    })
}

impl CarlemanFrame {
    pub fn dim(&self) -> usize {
        self.point.dim
    }

    /// `𝓐 = ℓ_t² − ℓ_tt − |∇ℓ|² + Δℓ − Ψ` as an expansion.
    pub fn a_expansion(&self) -> Result<Taylor> {
        let ell = self.exp.ell;
        self.exp.big_psi.require(0, "A")?;
        let lt = ell.dt();
        let mut a = lt * lt - ell.dt().dt() + ell.laplacian() - self.exp.big_psi;
        for g in ell.grad_x() {
            a -= g * g;
        }
        Ok(a)
    }

    /// `𝓑 = 𝓐Ψ + (𝓐ℓ_t)_t − ∇·(𝓐∇ℓ) + ½(Ψ_tt − ΔΨ)` at the point.
    pub fn b_value(&self) -> Result<f64> {
        let ell = self.exp.ell;
        let bp = self.exp.big_psi;
        let a = self.a_expansion()?;
        let mut b = a * bp + (a * ell.dt()).dt() + (bp.dt().dt() - bp.laplacian()) * 0.5;
        for (k, g) in ell.grad_x().into_iter().enumerate() {
            b -= (a * g).deriv(k + 1);
        }
        b.require(0, "B").map_err(|_| LabError::Capability {
            what: "B (fourth derivatives of rho, second of varrho)".into(),
            needed: 4,
            available: self.exp.rho.order().max(0) as usize,
        })?;
        Ok(b.value())
    }

    /// `θ/θ(point) = e^{ℓ − ℓ(point)}` as an expansion.
    pub fn theta_normalized(&self) -> Taylor {
        (self.exp.ell - self.ell).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{CounterRng, FnSpec};

    fn params(lambda: f64, gamma: f64, mu: f64, c: Point) -> WeightParams {
        WeightParams::new(lambda, gamma, mu, c).unwrap()
    }

    #[test]
    fn psi_is_one_at_zero_level_center() {
        let rho = FnSpec::affine(0.0, 1.0, &[-1.0]);
        let c = Point::new(0.3, &[0.3]);
        let f = eval_frame(&rho, &FnSpec::constant(1.0), &c, &params(2.0, 3.0, 0.5, c)).unwrap();
        assert_eq!(f.psi, 1.0);
        assert_eq!(f.phi, 1.0);
    }

    #[test]
    fn mu_zero_collapses_phi_to_psi() {
        let mut rng = CounterRng::new(11);
        for _ in 0..20 {
            let rho = FnSpec::random(&mut rng, 2);
            let p = Point::new(rng.uniform(-0.5, 0.5), &[rng.uniform(-0.5, 0.5), 0.1]);
            let c = Point::new(0.0, &[0.0, 0.0]);
            let f = eval_frame(&rho, &FnSpec::constant(0.0), &p, &params(1.0, 1.5, 0.0, c)).unwrap();
            assert_eq!(f.phi, f.psi);
        }
    }

    #[test]
    fn exponential_of_exponential() {
        let rho = FnSpec::time();
        let c = Point::new(0.0, &[0.0]);
        let f = eval_frame(&rho, &FnSpec::constant(0.0), &Point::new(1.0, &[0.4]), &params(1.0, 2.0, 0.0, c)).unwrap();
        let e2 = 2f64.exp();
        assert!((f.ell - e2).abs() <= 1e-12 * e2);
        assert!((f.theta - e2.exp()).abs() <= 1e-12 * e2.exp());
    }

    #[test]
    fn overflow_is_a_range_error() {
        let rho = FnSpec::time();
        let c = Point::new(0.0, &[0.0]);
        let e = eval_frame(&rho, &FnSpec::constant(0.0), &Point::new(1.0, &[0.0]), &params(300.0, 1.0, 0.0, c))
            .unwrap_err();
        assert!(matches!(e, LabError::Range { .. }));
    }

    #[test]
    fn phi_derivatives_match_closed_forms() {
        // φ_t = γψρ_t − 2μ(t−t₀), ∇φ = γψ∇ρ − 2μ(x−x₀),
        // φ_tt = γ²ψρ_t² + γψρ_tt − 2μ, φ_{x_j x_k} = γ²ψρ_jρ_k + γψρ_{jk} − 2μδ_{jk}
        let mut rng = CounterRng::new(5);
        for _ in 0..50 {
            let rho = FnSpec::random(&mut rng, 2);
            let c = Point::new(0.1, &[0.2, -0.1]);
            let (g, m) = (rng.uniform(0.5, 3.0), rng.uniform(0.0, 1.0));
            let p = Point::new(rng.uniform(-0.5, 0.5), &[rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)]);
            let f = eval_frame(&rho, &FnSpec::constant(0.0), &p, &params(1.0, g, m, c)).unwrap();
            let r = rho.jet2(&p).unwrap();
            let psi = f.psi;
            let tol = |v: f64| 1e-12 * v.abs().max(1.0) * 10.0;
            let phit = g * psi * r.grad_t - 2.0 * m * (p.t - c.t);
            assert!((f.phi_jet.grad_t - phit).abs() <= tol(phit));
            let phitt = g * g * psi * r.grad_t * r.grad_t + g * psi * r.hess_tt - 2.0 * m;
            assert!((f.phi_jet.hess_tt - phitt).abs() <= tol(phitt));
            for j in 0..2 {
                let gj = g * psi * r.grad_x[j] - 2.0 * m * (p.x[j] - c.x[j]);
                assert!((f.phi_jet.grad_x[j] - gj).abs() <= tol(gj));
                let tj = g * g * psi * r.grad_t * r.grad_x[j] + g * psi * r.hess_tx[j];
                assert!((f.phi_jet.hess_tx[j] - tj).abs() <= tol(tj));
                for k in 0..2 {
                    let d = if j == k { 2.0 * m } else { 0.0 };
                    let h = g * g * psi * r.grad_x[j] * r.grad_x[k] + g * psi * r.hess_xx(j, k) - d;
                    assert!((f.phi_jet.hess_xx(j, k) - h).abs() <= tol(h));
                }
            }
        }
    }

    #[test]
    fn a_has_closed_form() {
        // 𝓐 = λ²(φ_t² − |∇φ|²) − λ(2γψϱ + 6μ)
        let mut rng = CounterRng::new(9);
        for _ in 0..50 {
            let rho = FnSpec::random(&mut rng, 1);
            let varrho = FnSpec::random(&mut rng, 1);
            let (l, g, m) = (rng.uniform(1.0, 8.0), rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0));
            let p = Point::new(rng.uniform(-0.5, 0.5), &[rng.uniform(-0.5, 0.5)]);
            let c = Point::new(0.0, &[0.0]);
            let f = eval_frame(&rho, &varrho, &p, &params(l, g, m, c)).unwrap();
            let a = f.a_expansion().unwrap().value();
            let pj = f.phi_jet;
            let closed = l * l * (pj.grad_t.powi(2) - pj.grad_x_norm2())
                - l * (2.0 * g * f.psi * varrho.value(&p) + 6.0 * m);
            assert!((a - closed).abs() <= 1e-10 * closed.abs().max(1.0), "{a} vs {closed}");
        }
    }
}
