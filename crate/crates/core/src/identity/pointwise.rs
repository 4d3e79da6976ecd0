use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, Point};
use crate::taylor::{Taylor, MAX_ORDER};
use crate::weights::{vn_terms, CarlemanFrame, VnInputs, WeightFamily};

use super::cutoff::CutoffSpec;
use super::report::IdentityReport;

/// Default relative tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-8;

fn dot(a: &[Taylor], b: &[Taylor]) -> Taylor {
    a.iter()
        .zip(b)
        .fold(a[0].constant_like(0.0), |acc, (p, q)| acc + *p * *q)
}

fn wave(f: &Taylor) -> f64 {
    let n = f.nvars() - 1;
    f.d(&[0, 0]) - (1..=n).map(|k| f.d(&[k, k])).sum::<f64>()
}

fn capability(what: &str, needed: usize, f: &dyn AnalyticFn) -> LabError {
    LabError::Capability {
        what: what.into(),
        needed,
        available: f.max_order(),
    }
}

/// `I = −2ℓ_t v_t + 2∇ℓ·∇v + Ψv`
fn multiplier(frame: &CarlemanFrame, v: &Taylor) -> f64 {
    let ell = &frame.exp.ell;
    let n = frame.dim();
    let mut i = -2.0 * ell.d(&[0]) * v.d(&[0]) + frame.big_psi * v.value();
    for k in 1..=n {
        i += 2.0 * ell.d(&[k]) * v.d(&[k]);
    }
    i
}

/// Quadratic form `E(v)` of the weighted identity, without the `𝓑v²` term:
/// `(ℓ_tt + Δℓ − Ψ)v_t² + (ℓ_tt − Δℓ + Ψ)|∇v|² + 2Σℓ_{jk}v_jv_k − 4∇ℓ_t·∇v v_t`.
pub(crate) fn energy_form(frame: &CarlemanFrame, vt: f64, vx: &[f64]) -> f64 {
    let ell = &frame.exp.ell;
    let n = frame.dim();
    let ltt = ell.d(&[0, 0]);
    let lap: f64 = (1..=n).map(|k| ell.d(&[k, k])).sum();
    let bp = frame.big_psi;
    let mut e = (ltt + lap - bp) * vt * vt;
    let mut g2 = 0.0;
    for j in 0..n {
        g2 += vx[j] * vx[j];
        e -= 4.0 * ell.d(&[0, j + 1]) * vx[j] * vt;
        for k in 0..n {
            e += 2.0 * ell.d(&[j + 1, k + 1]) * vx[j] * vx[k];
        }
    }
    e + (ltt - lap + bp) * g2
}

/// Pointwise weighted identity for `v = θw` at `point`, with `θ` normalized
/// to 1 at the point (both sides are quadratic in `θ`).
///
/// LHS: `θ·I·(w_tt − Δw) + ∇·𝓥 + ∂_t𝓝`. RHS: `E(v) + 𝓑v² + I²`.
pub fn identity_residual(
    w: &dyn AnalyticFn,
    family: &WeightFamily,
    point: &Point,
) -> Result<IdentityReport> {
    let frame = family.frame(point)?;
    frame.exp.big_psi.require(2, "identity residual").map_err(|_| {
        capability("identity residual (fourth derivatives of rho)", 4, family.rho.as_ref())
    })?;
    frame
        .exp
        .varrho
        .require(2, "identity residual")
        .map_err(|_| capability("identity residual (second derivatives of varrho)", 2, family.varrho.as_ref()))?;
    let wt = w.taylor(point, MAX_ORDER);
    wt.require(2, "identity residual")
        .map_err(|_| capability("identity residual (second derivatives of w)", 2, w))?;
    let theta = frame.theta_normalized();
    let v = theta * wt;
    let ell = frame.exp.ell;
    let bp = frame.exp.big_psi;
    let a = frame.a_expansion()?;
    let inputs = VnInputs {
        v,
        vt: v.dt(),
        vx: v.grad_x(),
        lt: ell.dt(),
        lx: ell.grad_x(),
        big_psi: bp,
        big_psi_t: bp.dt(),
        big_psi_x: bp.grad_x(),
        a,
    };
    let (big_v, big_n) = vn_terms(&inputs);
    let div: f64 = big_v
        .iter()
        .enumerate()
        .map(|(j, f)| f.deriv(j + 1).value())
        .sum();
    let dn = big_n.dt().value();
    let i = multiplier(&frame, &v);
    let lhs = theta.value() * i * wave(&wt) + div + dn;
    let gv = v.gradient();
    let rhs = energy_form(&frame, gv[0], &gv[1..]) + frame.b_value()? * v.value() * v.value() + i * i;
    Ok(IdentityReport::new(lhs, rhs, IDENTITY_TOL, *point, Some(family.params)))
}

/// Conjugation and cutoff residuals at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugationReport {
    pub chi: f64,
    /// `θ(w_tt − Δw)` against its expression in `v = θw`.
    pub conjugation: IdentityReport,
    /// `w_tt − Δw` against its expansion in `u` for `w = χu`.
    pub cutoff: IdentityReport,
}

impl ConjugationReport {
    pub fn pass(&self) -> bool {
        self.conjugation.pass && self.cutoff.pass
    }
}

/// Residuals of the conjugation identity for `v = θw` and of the cutoff
/// expansion for `w = χu`, `χ = χ(φ)`.
pub fn conjugation_residual(
    u: &dyn AnalyticFn,
    family: &WeightFamily,
    cutoff: &CutoffSpec,
    point: &Point,
) -> Result<ConjugationReport> {
    cutoff.validate()?;
    let frame = family.frame(point)?;
    frame
        .exp
        .ell
        .require(2, "conjugation")
        .map_err(|_| capability("conjugation (second derivatives of rho)", 2, family.rho.as_ref()))?;
    let ut = u.taylor(point, 2);
    ut.require(2, "conjugation")
        .map_err(|_| capability("conjugation (second derivatives of u)", 2, u))?;
    let ell = frame.exp.ell.truncate(2);
    let chi = cutoff.expand(&frame.exp.phi.truncate(2));
    let w = chi * ut;

    let lu = wave(&ut);
    let lchi = wave(&chi);
    let gu = ut.gradient();
    let gc = chi.gradient();
    let n = point.dim;
    let mut cross = 0.0;
    for k in 1..=n {
        cross += gc[k] * gu[k];
    }
    let chi_tt = chi.d(&[0, 0]);
    let lap_chi = chi_tt - lchi;
    let cut_rhs = chi.value() * lu + (chi_tt * ut.value() + 2.0 * gc[0] * gu[0])
        - (2.0 * cross + lap_chi * ut.value());
    let lw = wave(&w);
    let cut = IdentityReport::new(lw, cut_rhs, IDENTITY_TOL, *point, Some(family.params));

    let theta = (ell - frame.ell).exp();
    let v = theta * w;
    let gv = v.gradient();
    let gl = ell.gradient();
    let lt = gl[0];
    let ltt = ell.d(&[0, 0]);
    let lap_l = ltt - wave(&ell);
    let lx = dot(&ell.grad_x(), &ell.grad_x()).value();
    let mut lv = 0.0;
    for k in 1..=n {
        lv += gl[k] * gv[k];
    }
    let vv = v.value();
    let conj_rhs = wave(&v) + (lt * lt - lx) * vv - (ltt - lap_l) * vv - 2.0 * lt * gv[0] + 2.0 * lv;
    let conj = IdentityReport::new(theta.value() * lw, conj_rhs, IDENTITY_TOL, *point, Some(family.params));
    Ok(ConjugationReport {
        chi: chi.value(),
        conjugation: conj,
        cutoff: cut,
    })
}
