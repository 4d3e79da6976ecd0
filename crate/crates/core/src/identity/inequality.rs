use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, Jet2, Point};
use crate::taylor::Taylor;
use crate::weights::{build_frame, build_m, eval_d, CarlemanFrame, WeightFamily, WeightParams};

use super::pointwise::energy_form;

/// Which Carleman estimate to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", deny_unknown_fields)]
pub enum InequalityPreset {
    /// Weighted identity lower bound with an arbitrary `ϱ`; leading λ³ term
    /// only, so no sign is expected below the asymptotic regime.
    #[serde(rename = "T3.2")]
    T32,
    /// `∫[E(v) + ℓ_t(dv_t)²] ≥ κ∫θ²(λ³w² + λw_t²)`.
    #[serde(rename = "T4.2")]
    T42 { c0: f64, c1: f64 },
    /// Pointwise `λφ_t(dv_t)² ≥ −3λ|φ_t|[(b₂−b₁ℓ_t)²v² + b₁²v_t²]`.
    #[serde(rename = "T5.1")]
    T51,
    /// Cone weight `ρ = α/2(t−t₀)² − |x−x₁|²`, `γ = 1`, `μ = 0`, `ϱ = 2`.
    #[serde(rename = "T6.2")]
    T62 { alpha: f64, c1: f64, c3: f64, t0: f64 },
}

impl InequalityPreset {
    pub fn name(&self) -> &'static str {
        match self {
            InequalityPreset::T32 => "T3.2",
            InequalityPreset::T42 { .. } => "T4.2",
            InequalityPreset::T51 => "T5.1",
            InequalityPreset::T62 { .. } => "T6.2",
        }
    }
}

/// Rectangular space-time patch sampled with spacing `h` on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub t: (f64, f64),
    pub x: Vec<(f64, f64)>,
    pub h: f64,
}

impl Region {
    fn counts(&self) -> Result<Vec<usize>> {
        if !(self.h > 0.0) || self.x.is_empty() || self.x.len() > 2 {
            return Err(LabError::Config(
                "region needs h > 0 and one or two spatial axes".into(),
            ));
        }
        std::iter::once(self.t)
            .chain(self.x.iter().copied())
            .map(|(lo, hi)| {
                let cells = (hi - lo) / self.h;
                let k = cells.round();
                if !(hi > lo) || (cells - k).abs() > 1e-9 * k.max(1.0) {
                    return Err(LabError::Config(format!(
                        "region side [{lo}, {hi}] is not a whole number of cells of {}",
                        self.h
                    )));
                }
                Ok(k as usize + 1)
            })
            .collect()
    }

    /// Node points and whether each lies on the patch boundary.
    pub fn nodes(&self) -> Result<Vec<(Point, bool)>> {
        let counts = self.counts()?;
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut c = [0.0; 3];
            let mut edge = false;
            for (a, &m) in counts.iter().enumerate().rev() {
                let i = rest % m;
                rest /= m;
                let lo = if a == 0 { self.t.0 } else { self.x[a - 1].0 };
                c[a] = lo + i as f64 * self.h;
                edge |= i == 0 || i == m - 1;
            }
            out.push((Point::new(c[0], &c[1..=self.x.len()]), edge));
        }
        Ok(out)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(1 + self.x.len() as i32)
    }
}

/// Inputs of an inequality scan: the weight family (its λ is overridden),
/// a manufactured `w` with `v = θw`, and the diffusion coefficients.
#[derive(Clone, Debug)]
pub struct InequalitySetup {
    pub preset: InequalityPreset,
    pub family: WeightFamily,
    pub w: Arc<dyn AnalyticFn>,
    pub b1: Arc<dyn AnalyticFn>,
    pub b2: Arc<dyn AnalyticFn>,
    pub region: Region,
}

/// Both sides at one λ, rescaled by `e^{−2λ·max φ}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapRow {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `2λ·max φ`; the unscaled gap is `gap·e^{log_scale}`.
    pub log_scale: f64,
    /// `ln(gap) + log_scale`, NaN unless `gap > 0`.
    pub log_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub preset: InequalityPreset,
    pub nodes: usize,
    pub phi_max: f64,
    /// Constant on the right of the T4.2 preset.
    pub kappa: Option<f64>,
    pub rows: Vec<GapRow>,
}

/// Per-node ingredients that do not depend on the preset.
struct Node {
    frame: CarlemanFrame,
    /// `θ e^{−λM}` times `w`
    v: Taylor,
    /// `e^{ℓ − λM}`
    theta: f64,
    wexp: Taylor,
    w: f64,
    wt: f64,
    b1: f64,
    b2: f64,
}

impl Node {
    fn v(&self) -> (f64, f64, Vec<f64>) {
        let g = self.v.gradient();
        (self.v.value(), g[0], g[1..].to_vec())
    }

    /// `ℓ_t(dv_t)²` density: `ℓ_t θ²(b₁w_t + b₂w)²`.
    fn noise(&self) -> f64 {
        let d = self.theta * (self.b1 * self.wt + self.b2 * self.w);
        self.frame.ell_jet.grad_t * d * d
    }

    fn energy(&self) -> Result<f64> {
        let (v, vt, vx) = self.v();
        Ok(energy_form(&self.frame, vt, &vx) + self.frame.b_value()? * v * v)
    }

    fn multiplier(&self) -> f64 {
        let (v, vt, vx) = self.v();
        let l = &self.frame.ell_jet;
        let mut i = -2.0 * l.grad_t * vt + self.frame.big_psi * v;
        for (j, g) in vx.iter().enumerate() {
            i += 2.0 * l.grad_x[j] * g;
        }
        i
    }
}

/// Returns `(lhs, rhs)` densities at one node.
fn densities(setup: &InequalitySetup, node: &Node, kappa: f64) -> Result<(f64, f64)> {
    let f = &node.frame;
    let WeightParams {
        lambda, gamma, mu, ..
    } = f.params;
    let (v, vt, vx) = node.v();
    let g2: f64 = vx.iter().map(|g| g * g).sum();
    match setup.preset {
        InequalityPreset::T32 => {
            let w = node.wexp;
            let lw = w.d(&[0, 0]) - (1..=vx.len()).map(|k| w.d(&[k, k])).sum::<f64>();
            let i = node.multiplier();
            let lhs = node.theta * i * lw;
            let rho = Jet2::from_taylor(&f.exp.rho);
            let psi = f.psi;
            let mut rv = rho.grad_t * vt;
            for (j, g) in vx.iter().enumerate() {
                rv -= rho.grad_x[j] * g;
            }
            let m = build_m(&rho, f.exp.varrho.value());
            let mut xi = vec![vt];
            xi.extend_from_slice(&vx);
            let d = eval_d(f)?;
            let rhs = 2.0 * lambda * gamma * gamma * psi * rv * rv
                + 2.0 * lambda * gamma * psi * m.quad_form(&xi)
                - 10.0 * lambda * mu * vt * vt
                + 2.0 * lambda * mu * g2
                + lambda.powi(3) * (d.d2 + d.d3) * v * v
                + i * i;
            Ok((lhs, rhs))
        }
        InequalityPreset::T42 { .. } => {
            let lhs = node.energy()? + node.noise();
            let th2 = node.theta * node.theta;
            let rhs = kappa * th2 * (lambda.powi(3) * node.w * node.w + lambda * node.wt * node.wt);
            Ok((lhs, rhs))
        }
        InequalityPreset::T51 => {
            let phi_t = f.phi_jet.grad_t;
            let lt = f.ell_jet.grad_t;
            let a = (node.b2 - node.b1 * lt) * v;
            let b = node.b1 * vt;
            let lhs = lambda * phi_t * (a + b) * (a + b);
            let rhs = -3.0 * lambda * phi_t.abs() * (a * a + b * b);
            Ok((lhs, rhs))
        }
        InequalityPreset::T62 { alpha, c1, c3, t0 } => {
            let lhs = node.energy()? + node.noise();
            let tau = f.point.t - t0;
            let psi = f.psi;
            let c12 = c1 * c1;
            let k3 = 0.5 * alpha.powi(3) * tau.powi(3) * c12 + 32.0 * c3 - 16.0 * alpha * tau * tau;
            let k1 = 2.0 * (alpha - 2.0) + 0.5 * alpha * tau * c12;
            let rhs = 0.5 * (lambda.powi(3) * psi.powi(3) * k3 * v * v + lambda * psi * k1 * vt * vt);
            Ok((lhs, rhs))
        }
    }
}

/// `κ = ½·min(γc₀c₁²/8, γ³c₀³c₁²/(4(1 + 2·max φ_t²)))`
pub fn t42_kappa(gamma: f64, c0: f64, c1: f64, max_phi_t2: f64) -> f64 {
    let c12 = c1 * c1;
    0.5 * (gamma * c0 * c12 / 8.0).min(gamma.powi(3) * c0.powi(3) * c12 / (4.0 * (1.0 + 2.0 * max_phi_t2)))
}

/// Integrates both sides of the preset over the region for each λ.
///
/// All θ-weighted densities are scaled by `e^{−2λ·max φ}` before summation.
pub fn inequality_gap(setup: &InequalitySetup, lambdas: &[f64]) -> Result<GapReport> {
    let nodes = setup.region.nodes()?;
    if nodes.iter().any(|(p, _)| p.dim != setup.family.params.center.dim) {
        return Err(LabError::Precondition("region and weight center differ in dimension".into()));
    }
    for (p, edge) in &nodes {
        if *edge && setup.w.value(p) != 0.0 {
            return Err(LabError::Support(format!(
                "w = {} at boundary node (t = {}, x = {:?})",
                setup.w.value(p),
                p.t,
                p.space()
            )));
        }
    }
    let base: Vec<CarlemanFrame> = nodes
        .par_iter()
        .map(|(p, _)| {
            build_frame(setup.family.rho.as_ref(), setup.family.varrho.as_ref(), p, &setup.family.params.with_lambda(1.0))
        })
        .collect::<Result<_>>()?;
    let phi_max = base.iter().map(|f| f.phi).fold(f64::NEG_INFINITY, f64::max);
    if let Some(f) = base.iter().find(|f| !f.phi.is_finite() || !f.phi_jet.grad_t.is_finite()) {
        return Err(LabError::Range { lambda_phi: f.phi });
    }
    let phi_t2 = base
        .iter()
        .map(|f| f.phi_jet.grad_t * f.phi_jet.grad_t)
        .fold(0.0, f64::max);
    let kappa = match setup.preset {
        InequalityPreset::T42 { c0, c1 } => Some(t42_kappa(setup.family.params.gamma, c0, c1, phi_t2)),
        _ => None,
    };
    let vol = setup.region.cell_volume();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let params = setup.family.params.with_lambda(lambda);
        params.validate()?;
        let shift = lambda * phi_max;
        let dens: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|(p, _)| {
                let w0 = setup.w.value(p);
                if w0 == 0.0 && setup.w.taylor(p, 2).gradient().iter().all(|g| *g == 0.0) {
                    return Ok((0.0, 0.0));
                }
                let frame = build_frame(setup.family.rho.as_ref(), setup.family.varrho.as_ref(), p, &params)?;
                let wt = setup.w.taylor(p, 2);
                wt.require(2, "inequality scan (second derivatives of w)")?;
                let th = (frame.exp.ell.truncate(2) - shift).exp();
                let node = Node {
                    frame,
                    v: th * wt,
                    theta: th.value(),
                    wexp: wt,
                    w: wt.value(),
                    wt: wt.d(&[0]),
                    b1: setup.b1.value(p),
                    b2: setup.b2.value(p),
                };
                densities(setup, &node, kappa.unwrap_or(0.0))
            })
            .collect::<Result<_>>()?;
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for (l, r) in dens {
            lhs += l;
            rhs += r;
        }
        lhs *= vol;
        rhs *= vol;
        let gap = lhs - rhs;
        let log_scale = 2.0 * shift;
        rows.push(GapRow {
            lambda,
            lhs,
            rhs,
            gap,
            log_scale,
            log_gap: if gap > 0.0 { gap.ln() + log_scale } else { f64::NAN },
        });
    }
    Ok(GapReport {
        preset: setup.preset,
        nodes: nodes.len(),
        phi_max,
        kappa,
        rows,
    })
}

/// Parameters fixed by the doubling/halving searches of the local
/// estimate: γ makes `𝓓₂ ≥ 0` at the center, μ then makes
/// `½c₁²φ_t³ + 𝓓₂ + 𝓓₃ ≥ γ³c₀³c₁²/3` and `½φ_tc₁² − 11μ ≥ γc₀c₁²/3` there.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalParameters {
    pub gamma: f64,
    pub mu: f64,
    pub gamma_steps: usize,
    pub mu_steps: usize,
    pub d2_center: f64,
    pub d3_center: f64,
    pub phi_t_center: f64,
}

const SEARCH_CAP: usize = 60;

pub fn fix_local_parameters(
    rho: &dyn AnalyticFn,
    varrho: &dyn AnalyticFn,
    center: &Point,
    c0: f64,
    c1: f64,
) -> Result<LocalParameters> {
    let rj = rho.jet2(center)?;
    if rj.grad_t < c0 {
        return Err(LabError::Precondition(format!(
            "rho_t = {} at the center is below c0 = {c0}",
            rj.grad_t
        )));
    }
    let at = |gamma: f64, mu: f64| -> Result<(f64, f64, f64)> {
        let p = WeightParams::new(1.0, gamma, mu, *center)?;
        let f = build_frame(rho, varrho, center, &p)?;
        let d = eval_d(&f)?;
        Ok((d.d2, d.d3, f.phi_jet.grad_t))
    };
    let mut gamma = 1.0;
    let mut gamma_steps = 0;
    while at(gamma, 0.0)?.0 < 0.0 {
        gamma *= 2.0;
        gamma_steps += 1;
        if gamma_steps > SEARCH_CAP {
            return Err(LabError::Search("no gamma makes D2 >= 0 at the center".into()));
        }
    }
    let c12 = c1 * c1;
    let mut mu = gamma * c0 * c12 / 66.0;
    let mut mu_steps = 0;
    loop {
        let (d2, d3, pt) = at(gamma, mu)?;
        let cubic = 0.5 * c12 * pt.powi(3) + d2 + d3 >= gamma.powi(3) * c0.powi(3) * c12 / 3.0;
        let linear = 0.5 * pt * c12 - 11.0 * mu >= gamma * c0 * c12 / 3.0;
        if cubic && linear {
            return Ok(LocalParameters {
                gamma,
                mu,
                gamma_steps,
                mu_steps,
                d2_center: d2,
                d3_center: d3,
                phi_t_center: pt,
            });
        }
        mu *= 0.5;
        mu_steps += 1;
        if mu_steps > SEARCH_CAP {
            return Err(LabError::Search("no mu satisfies the center conditions".into()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::FnSpec;

    fn center() -> Point {
        Point::new(0.0, &[0.0])
    }

    fn setup(preset: InequalityPreset, w: FnSpec) -> InequalitySetup {
        let lp = fix_local_parameters(&FnSpec::affine(0.0, 1.0, &[-1.0]), &FnSpec::constant(0.0), &center(), 1.0, 4.0)
            .unwrap();
        InequalitySetup {
            preset,
            family: WeightFamily::new(
                Arc::new(FnSpec::affine(0.0, 1.0, &[-1.0])),
                Arc::new(FnSpec::constant(0.0)),
                WeightParams::new(1.0, lp.gamma, lp.mu, center()).unwrap(),
            ),
            w: Arc::new(w),
            b1: Arc::new(FnSpec::constant(4.0)),
            b2: Arc::new(FnSpec::constant(0.0)),
            region: Region {
                t: (-0.25, 0.25),
                x: vec![(-0.25, 0.25)],
                h: 0.01,
            },
        }
    }

    fn bump() -> FnSpec {
        FnSpec::SpacetimeBump { t0: 0.0, x0: vec![0.0], radius: 0.2, power: 4 }
    }

    #[test]
    fn characteristic_plane_parameters() {
        let lp = fix_local_parameters(&FnSpec::affine(0.0, 1.0, &[-1.0]), &FnSpec::constant(0.0), &center(), 1.0, 1.0)
            .unwrap();
        assert_eq!(lp.gamma, 1.0);
        assert_eq!(lp.d2_center, 0.0);
        // 𝓓₃ = −4μγ²(ρ_t² + |∇ρ|²) at the center
        assert!((lp.d3_center + 8.0 * lp.mu).abs() < 1e-12);
        assert!(lp.mu <= 1.0 / 66.0);
    }

    #[test]
    fn zero_w_gives_zero_gap() {
        let r = inequality_gap(&setup(InequalityPreset::T42 { c0: 1.0, c1: 4.0 }, FnSpec::constant(0.0)), &[8.0, 16.0])
            .unwrap();
        for row in r.rows {
            assert_eq!(row.gap, 0.0);
        }
    }

    #[test]
    fn support_touching_boundary_is_rejected() {
        let e = inequality_gap(&setup(InequalityPreset::T51, FnSpec::constant(1.0)), &[8.0]).unwrap_err();
        assert!(matches!(e, LabError::Support(_)));
    }

    #[test]
    fn t51_is_nonnegative_and_quadratic() {
        let s = setup(InequalityPreset::T51, bump());
        let r = inequality_gap(&s, &[8.0, 32.0]).unwrap();
        let mut s2 = s.clone();
        s2.w = Arc::new(FnSpec::scale(2.0, bump()));
        let r2 = inequality_gap(&s2, &[8.0, 32.0]).unwrap();
        for (a, b) in r.rows.iter().zip(&r2.rows) {
            assert!(a.gap >= 0.0);
            assert_eq!(b.gap, 4.0 * a.gap);
        }
    }

    #[test]
    fn t42_gap_positive() {
        let s = setup(InequalityPreset::T42 { c0: 1.0, c1: 4.0 }, bump());
        let r = inequality_gap(&s, &[8.0, 16.0, 32.0, 64.0]).unwrap();
        for row in &r.rows {
            assert!(row.gap > 0.0, "{r:?}");
        }
        for pair in r.rows.windows(2) {
            assert!(pair[1].log_gap >= pair[0].log_gap, "{r:?}");
        }
    }
}
