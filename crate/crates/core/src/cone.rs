//! Cone regions `Q₀`, `Q₁`, the constant `c₃`, the intersection vertex
//! and the covering schedule that grows the zero region step by step.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_kit::Point;

/// Relative tolerance of the boundary class in [`membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// `k = √(3/2) − 1`, the vertex fraction along `[x₁, x₀]`.
pub fn vertex_fraction() -> f64 {
    1.5f64.sqrt() - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// `α(t − t₀)² − |x − x₀|² ≥ 0`, `t ≥ t₀`
    Q0,
    /// `α/2(t − t₀)² − |x − x₁|² > c₃`, `t ≥ t₀`
    Q1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub t0: f64,
    pub apex: Vec<f64>,
    pub alpha: f64,
    /// 0 for `Q0`, `c₃` for `Q1`.
    pub offset: f64,
}

impl ConeSpec {
    pub fn q0(t0: f64, x0: &[f64], alpha: f64) -> Result<Self> {
        Self::new(ConeKind::Q0, t0, x0, alpha, 0.0)
    }

    pub fn q1(t0: f64, x1: &[f64], alpha: f64, c3: f64) -> Result<Self> {
        Self::new(ConeKind::Q1, t0, x1, alpha, c3)
    }

    fn new(kind: ConeKind, t0: f64, apex: &[f64], alpha: f64, offset: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(offset >= 0.0) {
            return Err(LabError::Config(format!("cone offset must be >= 0, got {offset}")));
        }
        Ok(ConeSpec {
            kind,
            t0,
            apex: apex.to_vec(),
            alpha,
            offset,
        })
    }

    /// The defining expression, positive inside, and a magnitude scale.
    pub fn expression(&self, p: &Point) -> (f64, f64) {
        let dt2 = (p.t - self.t0).powi(2);
        let dx2: f64 = p
            .space()
            .iter()
            .zip(&self.apex)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let a = match self.kind {
            ConeKind::Q0 => self.alpha,
            ConeKind::Q1 => 0.5 * self.alpha,
        };
        (a * dt2 - dx2 - self.offset, 1f64.max(a * dt2).max(dx2).max(self.offset))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    // α = 1 is admitted for reference arithmetic
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LabError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `c₃ = max{8(α−2)²/(c₁⁴α), 512/(c₁⁴α³)} + 1`
pub fn c3_constant(alpha: f64, c1: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(LabError::Config(format!("c1 must be positive, got {c1}")));
    }
    let c14 = c1.powi(4);
    let a = 8.0 * (alpha - 2.0).powi(2) / (c14 * alpha);
    let b = 512.0 / (c14 * alpha.powi(3));
    Ok(a.max(b) + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `p` against `cone`; points before the apex time are outside.
pub fn membership(p: &Point, cone: &ConeSpec) -> Membership {
    if p.t < cone.t0 {
        return Membership::Outside;
    }
    let (e, scale) = cone.expression(p);
    if e.abs() <= MEMBERSHIP_TOL * scale {
        Membership::Boundary
    } else if e > 0.0 {
        Membership::Inside
    } else {
        Membership::Outside
    }
}

/// Lowest point `(t₂, x₂)` of `∂Q₀(t₀,x₀) ∩ ∂Q₁(t₀,x₁)`.
#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub t2: f64,
    pub x2: Vec<f64>,
    /// Relative residuals of `α(t₂−t₀)² − |x₂−x₀|² = 0` and
    /// `α/2(t₂−t₀)² − |x₂−x₁|² = c₃`.
    pub residual_q0: f64,
    pub residual_q1: f64,
    /// `T₀ = t₂ − t₀`
    pub t_offset: f64,
    /// `X₀ = |x₁ − x₂|`
    pub x_offset: f64,
}

pub fn vertex(t0: f64, x0: &[f64], x1: &[f64], alpha: f64, c3: f64) -> Result<Vertex> {
    check_alpha(alpha)?;
    if x0.len() != x1.len() || x0.is_empty() {
        return Err(LabError::Geometry("apices must share a positive dimension".into()));
    }
    let d2: f64 = x0.iter().zip(x1).map(|(a, b)| (a - b) * (a - b)).sum();
    if (d2 - 4.0 * c3).abs() > 1e-9 * (4.0 * c3).max(1.0) {
        return Err(LabError::Geometry(format!(
            "|x1 - x0|^2 = {d2} differs from 4 c3 = {}",
            4.0 * c3
        )));
    }
    let k = vertex_fraction();
    let t_offset = (2.0 - 1.5f64.sqrt()) * 2.0 * c3.sqrt() / alpha.sqrt();
    let t2 = t0 + t_offset;
    let x2: Vec<f64> = x1.iter().zip(x0).map(|(a, b)| a + k * (b - a)).collect();
    let p = Point::new(t2, &x2);
    let (e0, s0) = ConeSpec::q0(t0, x0, alpha)?.expression(&p);
    let (e1, s1) = ConeSpec::q1(t0, x1, alpha, c3)?.expression(&p);
    let x_offset = x1.iter().zip(&x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(Vertex {
        t2,
        x2,
        residual_q0: e0.abs() / s0,
        residual_q1: e1.abs() / s1,
        t_offset,
        x_offset,
    })
}

/// Unit directions: `±1` in one dimension, `m` angles in two.
fn directions(n: usize, m: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..m)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }
}

/// Samples `∂Q₀(t₀,x₀) ∩ closure Q₁(t₀,x₁)` on a mesh of about `points`
/// nodes and returns the lowest sampled time (infinite when empty).
pub fn sampled_min_time(t0: f64, x0: &[f64], x1: &[f64], alpha: f64, c3: f64, points: usize) -> Result<f64> {
    let q1 = ConeSpec::q1(t0, x1, alpha, c3)?;
    let n = x0.len();
    let dirs = directions(n, (points as f64).sqrt().ceil() as usize);
    let nt = (points / dirs.len()).max(2);
    let d = 2.0 * c3.sqrt();
    let tau_max = 4.0 * d / alpha.sqrt();
    let mut best = f64::INFINITY;
    for w in &dirs {
        for i in 0..nt {
            let tau = tau_max * i as f64 / (nt - 1) as f64;
            let x: Vec<f64> = x0.iter().zip(w).map(|(a, b)| a + alpha.sqrt() * tau * b).collect();
            let p = Point::new(t0 + tau, &x);
            if membership(&p, &q1) != Membership::Outside {
                best = best.min(p.t);
            }
        }
    }
    Ok(best)
}

/// One step of the covering schedule: zero on `{t ≥ T₀, |x| ≤ √α t + step·X₀}`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepState {
    pub step: usize,
    pub radius_offset: f64,
    /// Hypothesis-surface samples checked against the previous region.
    pub hypothesis_samples: usize,
    /// Witness points `(t, x₁')` with `|x₁'| = √α t + step·X₀` checked to lie
    /// in `Q₁ ∖ Q₀` of the step's cones.
    pub witnesses: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSchedule {
    pub alpha: f64,
    pub c1: f64,
    pub c3: f64,
    /// `T₀`
    pub t_offset: f64,
    /// `X₀`
    pub x_offset: f64,
    pub radius: f64,
    pub steps_needed: usize,
    pub states: Vec<SweepState>,
}

/// Options of [`sweep_cover`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    /// Spatial dimension of the sampled surfaces.
    pub dim: usize,
    /// Mesh spacing as a fraction of the cone scale `2√c₃`.
    pub mesh: f64,
    /// Number of witness times in `[T₀, target_T]`.
    pub witness_times: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dim: 1,
            mesh: 1e-2,
            witness_times: 5,
        }
    }
}

/// `|x| ≤ √α t + r` and `t ≥ 0`, with a relative tolerance.
fn in_certified(p: &Point, alpha: f64, r: f64) -> bool {
    let nx = p.space().iter().map(|v| v * v).sum::<f64>().sqrt();
    let bound = alpha.sqrt() * p.t + r;
    p.t >= -MEMBERSHIP_TOL && nx <= bound + MEMBERSHIP_TOL * bound.abs().max(1.0)
}

/// Builds the schedule covering `{t ≥ T₀, |x| ≤ radius}` with apices
/// normalized to `(0, 0)`, verifying each step by dense sampling.
pub fn sweep_cover(alpha: f64, c1: f64, target_t: f64, radius: f64, opts: &SweepOptions) -> Result<SweepSchedule> {
    let c3 = c3_constant(alpha, c1)?;
    if opts.dim == 0 || opts.dim > 2 || !(opts.mesh > 0.0 && opts.mesh < 1.0) {
        return Err(LabError::Config("sweep needs dim 1 or 2 and mesh in (0, 1)".into()));
    }
    let d = 2.0 * c3.sqrt();
    let k = vertex_fraction();
    let x_offset = k * d;
    let t_offset = (1.0 - k) * d / alpha.sqrt();
    if target_t < t_offset {
        return Err(LabError::Geometry(format!(
            "target time {target_t} is below T0 = {t_offset}"
        )));
    }
    let sa = alpha.sqrt();
    let steps_needed = ((radius - sa * t_offset) / x_offset).ceil().max(0.0) as usize;
    let n = opts.dim;
    let per_axis = (1.0 / opts.mesh).ceil() as usize;
    let dirs = directions(n, per_axis);
    let mut states = Vec::with_capacity(steps_needed);
    for step in 1..=steps_needed {
        let prev = (step - 1) as f64 * x_offset;
        let mut hyp = 0;
        let mut wit = 0;
        for w in &dirs {
            // base cones with apex time 0 on the previous region's edge
            let x0: Vec<f64> = w.iter().map(|c| prev * c).collect();
            let x1: Vec<f64> = w.iter().map(|c| (prev + d) * c).collect();
            let q1 = ConeSpec::q1(0.0, &x1, alpha, c3)?;
            for w2 in &dirs {
                for i in 0..=per_axis {
                    let tau = 4.0 * d / sa * i as f64 / per_axis as f64;
                    let x: Vec<f64> = x0.iter().zip(w2).map(|(a, b)| a + sa * tau * b).collect();
                    let p = Point::new(tau, &x);
                    if membership(&p, &q1) == Membership::Outside {
                        continue;
                    }
                    hyp += 1;
                    if !in_certified(&p, alpha, prev) {
                        return Err(LabError::Geometry(format!(
                            "step {step}: hypothesis sample (t = {}, x = {:?}) lies outside the certified region",
                            p.t,
                            p.space()
                        )));
                    }
                }
            }
            let m = opts.witness_times.max(1);
            for j in 0..m {
                let t = if m == 1 {
                    t_offset
                } else {
                    t_offset + (target_t - t_offset) * j as f64 / (m - 1) as f64
                };
                let shift = t - t_offset;
                let x0s: Vec<f64> = x0.iter().zip(w).map(|(a, c)| a + sa * shift * c).collect();
                let x1s: Vec<f64> = x1.iter().zip(w).map(|(a, c)| a + sa * shift * c).collect();
                let p = Point::new(t, &x1s);
                let q0s = ConeSpec::q0(shift, &x0s, alpha)?;
                let q1s = ConeSpec::q1(shift, &x1s, alpha, c3)?;
                let nx = x1s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let target = sa * t + step as f64 * x_offset;
                if membership(&p, &q1s) != Membership::Inside
                    || membership(&p, &q0s) != Membership::Outside
                    || (nx - target).abs() > 1e-9 * target.max(1.0)
                {
                    return Err(LabError::Geometry(format!(
                        "step {step}: witness (t = {t}, x = {x1s:?}) is not in Q1 minus Q0"
                    )));
                }
                wit += 1;
            }
        }
        states.push(SweepState {
            step,
            radius_offset: step as f64 * x_offset,
            hypothesis_samples: hyp,
            witnesses: wit,
        });
    }
    Ok(SweepSchedule {
        alpha,
        c1,
        c3,
        t_offset,
        x_offset,
        radius,
        steps_needed,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c3_reference_values() {
        assert_eq!(c3_constant(1.0, 1.0).unwrap(), 513.0);
        assert_eq!(c3_constant(0.5, 1.0).unwrap(), 4097.0);
        let a = c3_constant(0.5, 1.0).unwrap() - 1.0;
        let b = c3_constant(0.5, 2.0).unwrap() - 1.0;
        assert_eq!(a / 16.0, b);
        assert!(c3_constant(0.0, 1.0).is_err());
        assert!(c3_constant(1.5, 1.0).is_err());
        assert!(c3_constant(0.5, -1.0).is_err());
    }

    #[test]
    fn vertex_reference() {
        let c3: f64 = 513.0;
        let x1 = [2.0 * c3.sqrt(), 0.0];
        let v = vertex(0.0, &[0.0, 0.0], &x1, 1.0, c3).unwrap();
        assert!((v.t2 - 35.12).abs() < 5e-3);
        assert!(v.residual_q0 <= 1e-9 && v.residual_q1 <= 1e-9);
        assert!((v.x2[0] / x1[0] - (1.0 - vertex_fraction())).abs() < 1e-15);
        let s = vertex(3.0, &[1.0, -2.0], &[1.0 + x1[0], -2.0], 1.0, c3).unwrap();
        assert!((s.t_offset - v.t_offset).abs() < 1e-12);
        assert!((s.x_offset - v.x_offset).abs() < 1e-12);
        assert!(matches!(vertex(0.0, &[0.0], &[1.0], 1.0, c3), Err(LabError::Geometry(_))));
    }

    #[test]
    fn membership_cases() {
        let q0 = ConeSpec::q0(0.0, &[0.0], 0.5).unwrap();
        assert_eq!(membership(&Point::new(0.0, &[0.0]), &q0), Membership::Boundary);
        assert_eq!(membership(&Point::new(-1.0, &[0.0]), &q0), Membership::Outside);
        let c3 = c3_constant(0.5, 1.0).unwrap();
        let x1 = [2.0 * c3.sqrt()];
        let v = vertex(0.0, &[0.0], &x1, 0.5, c3).unwrap();
        let q1 = ConeSpec::q1(0.0, &x1, 0.5, c3).unwrap();
        let k = vertex_fraction();
        for i in 0..20 {
            let kt = -k + 2.0 * k * (i as f64 + 0.5) / 20.0;
            let p = Point::new(v.t2, &[x1[0] + kt * (0.0 - x1[0])]);
            assert_eq!(membership(&p, &q1), Membership::Inside);
            assert_eq!(membership(&p, &q0), Membership::Outside);
        }
        assert_eq!(membership(&Point::new(v.t2, &v.x2), &q1), Membership::Boundary);
    }

    #[test]
    fn vertex_is_minimal() {
        for (alpha, n) in [(0.5, 1), (0.8, 2)] {
            let c3 = c3_constant(alpha, 2.0).unwrap();
            let mut x1 = vec![0.0; n];
            x1[0] = 2.0 * c3.sqrt();
            let x0 = vec![0.0; n];
            let v = vertex(0.0, &x0, &x1, alpha, c3).unwrap();
            let m = sampled_min_time(0.0, &x0, &x1, alpha, c3, 100_000).unwrap();
            assert!(m >= v.t2 - 1e-6, "{m} < {}", v.t2);
            assert!(m.is_finite());
        }
    }

    #[test]
    fn sweep_schedule() {
        let o = SweepOptions::default();
        let c3 = c3_constant(0.5, 2.0).unwrap();
        let base = sweep_cover(0.5, 2.0, 100.0, 0.0, &o).unwrap();
        assert_eq!(base.steps_needed, 0);
        let r = 0.5f64.sqrt() * base.t_offset + 3.5 * base.x_offset;
        let s = sweep_cover(0.5, 2.0, 100.0, r, &o).unwrap();
        assert_eq!(s.steps_needed, 4);
        assert_eq!(s.states.len(), 4);
        for (i, st) in s.states.iter().enumerate() {
            assert_eq!(st.step, i + 1);
            assert!(st.hypothesis_samples > 0 && st.witnesses > 0);
        }
        assert!((s.x_offset - vertex_fraction() * 2.0 * c3.sqrt()).abs() < 1e-12);
        let two = sweep_cover(0.5, 2.0, 100.0, r, &SweepOptions { dim: 2, mesh: 0.05, witness_times: 3 }).unwrap();
        assert_eq!(two.steps_needed, 4);
        assert!(sweep_cover(0.5, 2.0, 1.0, r, &o).is_err());
    }
}
