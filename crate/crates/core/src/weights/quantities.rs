use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, Jet2, Point};
use crate::linalg::polyfit;
use crate::taylor::{Scalar, Taylor};

use super::frame::{build_frame, CarlemanFrame, WeightParams};
use super::matrix::build_m;

/// The auxiliary quantities of the weighted energy identity at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DQuantities {
    pub d1: f64,
    /// `𝓓₂` from the matrix form.
    pub d2: f64,
    /// `𝓓₂` from the divergence form.
    pub d2_div: f64,
    /// Sum of magnitudes of the matrix-form terms; the natural scale for
    /// comparing the two `𝓓₂` forms.
    pub d2_scale: f64,
    pub d3: f64,
    pub a: f64,
    pub b: f64,
    /// `ψ_t² − |∇ψ|² + 𝓓₁`, the λ² coefficient of `𝓐`.
    pub a_lead: f64,
    /// `𝓓₂ + 𝓓₃`, the λ³ coefficient of `𝓑`.
    pub b_lead: f64,
}

impl DQuantities {
    /// `|𝓓₂ − 𝓓₂_div| / d2_scale`
    pub fn d2_relative_gap(&self) -> f64 {
        let gap = (self.d2 - self.d2_div).abs();
        if self.d2_scale > 0.0 {
            gap / self.d2_scale
        } else {
            gap
        }
    }
}

/// Matrix form `4γ³ψ³ϱq + 2γ³ψ³ r𝓜(ϱ)rᵀ + 2γ⁴ψ³q²`, with
/// `q = ρ_t² − |∇ρ|²` and `r = (ρ_t, ∇ρ)`. Returns `(value, scale)`.
pub fn d2_matrix_form(rho: &Jet2, varrho: f64, gamma: f64) -> (f64, f64) {
    let psi = (gamma * rho.value).exp();
    let q = rho.grad_t * rho.grad_t - rho.grad_x_norm2();
    let m = build_m(rho, varrho);
    let mut r = vec![rho.grad_t];
    r.extend_from_slice(&rho.grad_x[..rho.n]);
    let g3 = gamma.powi(3) * psi.powi(3);
    let t1 = 4.0 * g3 * varrho * q;
    let t2 = 2.0 * g3 * m.quad_form(&r);
    let t3 = 2.0 * gamma * g3 * q * q;
    (t1 + t2 + t3, t1.abs() + t2.abs() + t3.abs())
}

/// Evaluates `𝓓₁, 𝓓₂ (both forms), 𝓓₃, 𝓐, 𝓑` at the frame point.
///
/// Requires `ρ` to fourth order and `ϱ` to second order.
pub fn eval_d(frame: &CarlemanFrame) -> Result<DQuantities> {
    let e = &frame.exp;
    e.rho.require(2, "D quantities")?;
    let WeightParams {
        gamma, mu, center, ..
    } = frame.params;
    let order = e.psi.order().max(0) as usize;
    let (t, xs) = frame.point.coordinates(order);
    let dt = t - center.t;
    let dx: Vec<Taylor> = xs
        .iter()
        .enumerate()
        .map(|(a, x)| *x - center.x[a])
        .collect();
    let psi = e.psi;
    let psi_t = psi.dt();
    let psi_x = psi.grad_x();
    let dot = |a: &[Taylor], b: &[Taylor]| {
        a.iter()
            .zip(b.iter())
            .fold(a[0].constant_like(0.0), |acc, (p, q)| acc + *p * *q)
    };
    let g = psi_t * psi_t - dot(&psi_x, &psi_x);
    let d1 = (dt * dt - dot(&dx, &dx)) * (4.0 * mu * mu) - dt * psi_t * (4.0 * mu)
        + dot(&dx, &psi_x) * (4.0 * mu);
    let varrho = e.varrho;
    let d2_div = psi * varrho * g * (2.0 * gamma) + g.dt() * psi_t - dot(&g.grad_x(), &psi_x);
    let gd = g + d1;
    let d3 = psi * varrho * d1 * (2.0 * gamma) + g * (6.0 * mu) + d1 * (6.0 * mu)
        - dt * gd.dt() * (2.0 * mu)
        + d1.dt() * psi_t
        - dot(&d1.grad_x(), &psi_x)
        + dot(&dx, &gd.grad_x()) * (2.0 * mu);
    let rho_jet = Jet2::from_taylor(&e.rho);
    let (d2, d2_scale) = d2_matrix_form(&rho_jet, varrho.value(), gamma);
    let q = DQuantities {
        d1: d1.value(),
        d2,
        d2_div: d2_div.value(),
        d2_scale,
        d3: d3.value(),
        a: frame.a_expansion()?.value(),
        b: frame.b_value()?,
        a_lead: gd.value(),
        b_lead: d2 + d3.value(),
    };
    debug_assert!(
        q.d2_relative_gap() <= 1e-9,
        "D2 forms disagree: {} vs {} (scale {})",
        q.d2,
        q.d2_div,
        q.d2_scale
    );
    Ok(q)
}

/// Inputs of the flux terms `𝓥` and `𝓝`, generic over values or expansions.
#[derive(Clone, Debug)]
pub struct VnInputs<S> {
    pub v: S,
    pub vt: S,
    pub vx: Vec<S>,
    pub lt: S,
    pub lx: Vec<S>,
    pub big_psi: S,
    pub big_psi_t: S,
    pub big_psi_x: Vec<S>,
    pub a: S,
}

/// `𝓥 = 2(∇ℓ·∇v)∇v − ∇ℓ|∇v|² − 2ℓ_t∇v v_t + ∇ℓ v_t² + Ψv∇v − (∇Ψ/2)v² − 𝓐v²∇ℓ`
/// and `𝓝 = ℓ_t|∇v|² + ℓ_t v_t² − 2∇ℓ·∇v v_t − Ψ v v_t + (𝓐ℓ_t + Ψ_t/2)v²`.
pub fn vn_terms<S: Scalar>(i: &VnInputs<S>) -> (Vec<S>, S) {
    let zero = i.v.constant_like(0.0);
    let lv = i
        .lx
        .iter()
        .zip(i.vx.iter())
        .fold(zero, |acc, (l, v)| acc + *l * *v);
    let vv = i.vx.iter().fold(zero, |acc, v| acc + *v * *v);
    let v2 = i.v * i.v;
    let vt2 = i.vt * i.vt;
    let big_v = (0..i.vx.len())
        .map(|j| {
            i.vx[j] * lv * 2.0 - i.lx[j] * vv - i.lt * i.vx[j] * i.vt * 2.0
                + i.lx[j] * vt2
                + i.big_psi * i.v * i.vx[j]
                - i.big_psi_x[j] * v2 * 0.5
                - i.a * v2 * i.lx[j]
        })
        .collect();
    let big_n = i.lt * vv + i.lt * vt2 - lv * i.vt * 2.0 - i.big_psi * i.v * i.vt
        + (i.a * i.lt + i.big_psi_t * 0.5) * v2;
    (big_v, big_n)
}

/// `𝓥` and the density of `𝓝` for the jet `v` at the frame point.
pub fn eval_vn(v: &Jet2, frame: &CarlemanFrame) -> Result<(Vec<f64>, f64)> {
    let bp = frame.exp.big_psi;
    bp.require(1, "V (gradient of Psi)")?;
    let n = frame.dim();
    let ell = &frame.ell_jet;
    let inputs = VnInputs {
        v: v.value,
        vt: v.grad_t,
        vx: v.grad_x[..n].to_vec(),
        lt: ell.grad_t,
        lx: ell.grad_x[..n].to_vec(),
        big_psi: bp.value(),
        big_psi_t: bp.d(&[0]),
        big_psi_x: (1..=n).map(|k| bp.d(&[k])).collect(),
        a: frame.a_expansion()?.value(),
    };
    Ok(vn_terms(&inputs))
}

/// Least-squares recovery of the leading λ-coefficients of `𝓐` and `𝓑`.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub lambdas: Vec<f64>,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub a_fit: f64,
    pub a_expected: f64,
    pub a_rel_err: f64,
    pub b_fit: f64,
    pub b_expected: f64,
    pub b_rel_err: f64,
}

/// λ grid `2⁴, …, 2⁹` used by the coefficient fits.
pub fn default_fit_lambdas() -> Vec<f64> {
    (4..=9).map(|k| 2f64.powi(k)).collect()
}

/// Fits `𝓐(λ)` by a quadratic and `𝓑(λ)` by a cubic in λ.
///
/// Relative errors are measured against `max(|expected|, 1)`.
pub fn expansion_fit(
    rho: &dyn AnalyticFn,
    varrho: &dyn AnalyticFn,
    point: &Point,
    params: &WeightParams,
    lambdas: &[f64],
) -> Result<ExpansionReport> {
    if lambdas.len() < 4 {
        return Err(LabError::Precondition(
            "expansion fit needs at least four lambda values".into(),
        ));
    }
    let mut a_values = Vec::with_capacity(lambdas.len());
    let mut b_values = Vec::with_capacity(lambdas.len());
    let mut expected = None;
    for &l in lambdas {
        let frame = build_frame(rho, varrho, point, &params.with_lambda(l))?;
        let q = eval_d(&frame)?;
        a_values.push(q.a);
        b_values.push(q.b);
        expected.get_or_insert((q.a_lead, q.b_lead));
    }
    let (a_expected, b_expected) = expected.unwrap();
    let a_fit = polyfit(lambdas, &a_values, 2)?[2];
    let b_fit = polyfit(lambdas, &b_values, 3)?[3];
    Ok(ExpansionReport {
        lambdas: lambdas.to_vec(),
        a_values,
        b_values,
        a_fit,
        a_expected,
        a_rel_err: (a_fit - a_expected).abs() / a_expected.abs().max(1.0),
        b_fit,
        b_expected,
        b_rel_err: (b_fit - b_expected).abs() / b_expected.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{CounterRng, FnSpec, JetOnly};
    use crate::weights::eval_frame;
    use std::sync::Arc;

    fn params(lambda: f64, gamma: f64, mu: f64, n: usize) -> WeightParams {
        let c = if n == 1 {
            Point::new(0.05, &[-0.1])
        } else {
            Point::new(0.05, &[-0.1, 0.2])
        };
        WeightParams::new(lambda, gamma, mu, c).unwrap()
    }

    #[test]
    fn d1_vanishes_at_center() {
        let rho = FnSpec::exp(FnSpec::affine(0.1, 1.0, &[0.5]));
        let p = params(2.0, 1.0, 0.7, 1);
        let f = eval_frame(&rho, &FnSpec::constant(0.3), &p.center, &p).unwrap();
        assert_eq!(eval_d(&f).unwrap().d1, 0.0);
    }

    #[test]
    fn characteristic_plane_has_zero_d2() {
        let rho = FnSpec::affine(0.2, 1.0, &[-1.0]);
        for gamma in [0.5, 1.0, 4.0] {
            let p = params(1.0, gamma, 0.0, 1);
            let f = eval_frame(&rho, &FnSpec::constant(1.7), &Point::new(0.3, &[0.4]), &p).unwrap();
            let q = eval_d(&f).unwrap();
            assert_eq!(q.d2, 0.0);
            assert!(q.d2_div.abs() < 1e-14);
        }
    }

    #[test]
    fn mu_zero_kills_d1_d3() {
        let mut rng = CounterRng::new(3);
        for _ in 0..20 {
            let rho = FnSpec::random(&mut rng, 2);
            let varrho = FnSpec::random(&mut rng, 2);
            let p = params(3.0, 1.3, 0.0, 2);
            let pt = Point::new(rng.uniform(-0.5, 0.5), &[rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)]);
            let q = eval_d(&eval_frame(&rho, &varrho, &pt, &p).unwrap()).unwrap();
            assert_eq!(q.d1, 0.0);
            assert_eq!(q.d3, 0.0);
        }
    }

    #[test]
    fn d1_equals_weight_difference() {
        // 𝓓₁ = (φ_t² − |∇φ|²) − (ψ_t² − |∇ψ|²)
        let mut rng = CounterRng::new(4);
        for _ in 0..50 {
            let rho = FnSpec::random(&mut rng, 2);
            let p = params(1.0, rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0), 2);
            let pt = Point::new(rng.uniform(-0.5, 0.5), &[rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)]);
            let f = eval_frame(&rho, &FnSpec::constant(0.0), &pt, &p).unwrap();
            let q = eval_d(&f).unwrap();
            let psi = f.exp.psi;
            let gpsi = psi.d(&[0]).powi(2) - psi.d(&[1]).powi(2) - psi.d(&[2]).powi(2);
            let gphi = f.phi_jet.grad_t.powi(2) - f.phi_jet.grad_x_norm2();
            assert!((q.d1 - (gphi - gpsi)).abs() <= 1e-11 * gphi.abs().max(1.0));
        }
    }

    #[test]
    fn vn_vanish_for_zero_jet_and_flat_weight() {
        let rho = FnSpec::constant(0.0);
        let p = params(1.0, 1.0, 0.0, 1);
        let f = eval_frame(&rho, &FnSpec::constant(0.0), &Point::new(0.0, &[0.0]), &p).unwrap();
        let (v, n) = eval_vn(&Jet2::zero(1), &f).unwrap();
        assert_eq!((v, n), (vec![0.0], 0.0));
        let mut w = Jet2::zero(1);
        w.value = 1.0;
        w.grad_t = 0.5;
        w.grad_x = [2.0, 0.0];
        assert!(f.big_psi.abs() < 1e-15);
        let (v, _) = eval_vn(&w, &f).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn b_needs_fourth_order_rho() {
        let rho: Arc<dyn AnalyticFn> = Arc::new(FnSpec::exp(FnSpec::affine(0.0, 1.0, &[0.3])));
        let j = JetOnly::new(rho, 2);
        let p = params(2.0, 1.0, 0.1, 1);
        let f = eval_frame(&j, &FnSpec::constant(0.0), &Point::new(0.1, &[0.1]), &p).unwrap();
        assert!(matches!(eval_d(&f), Err(LabError::Capability { needed: 4, .. })));
    }

    #[test]
    fn expansion_fit_on_fixed_case() {
        let rho = FnSpec::sum(vec![FnSpec::affine(0.0, 1.0, &[-0.5]), FnSpec::Quadric {
            c: 0.0,
            at: 0.2,
            ax: -0.3,
            t0: 0.0,
            x0: vec![0.0],
        }]);
        let varrho = FnSpec::cos(FnSpec::affine(0.0, 1.0, &[1.0]));
        let p = params(1.0, 1.5, 0.4, 1);
        let r = expansion_fit(&rho, &varrho, &Point::new(0.2, &[0.1]), &p, &default_fit_lambdas()).unwrap();
        assert!(r.a_rel_err <= 1e-6, "{r:?}");
        assert!(r.b_rel_err <= 1e-5, "{r:?}");
    }
}
