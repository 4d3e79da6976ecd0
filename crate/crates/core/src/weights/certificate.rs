use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field_kit::{AnalyticFn, CounterRng, Jet2, Point};
use crate::linalg::SymMatrix;

use super::matrix::build_m;

/// Eigenvalue floor for accepting a positivity claim.
pub const PSD_FLOOR: f64 = 1e-9;
/// Largest τ tried by the doubling search.
pub const TAU_CAP: f64 = (1u64 << 20) as f64;

/// One step of the τ search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauTrial {
    pub tau: f64,
    /// Smallest eigenvalue of `I − τ⁻¹ Hess g(x₀)`.
    pub min_eig: f64,
    pub accepted: bool,
}

/// Outcome of the characteristic-surface positivity construction.
#[derive(Clone, Debug, Serialize)]
pub struct PsdCertificate {
    pub tau: f64,
    pub t0: f64,
    pub trials: Vec<TauTrial>,
    pub min_eig: f64,
    /// `𝓜̃ = ρ_tt I + Hess_x ρ` for `ρ = e^{τt} − e^{τg}`, from exact jets.
    pub m_tilde: SymMatrix,
    /// `τ²e^{τt₀}[I − ∇g∇gᵀ − Hess g/τ]`
    pub m_tilde_closed: SymMatrix,
    /// Smallest eigenvalue of the full `𝓜(ρ_tt)`.
    pub m_full_min_eig: f64,
    pub tangent_samples: usize,
    /// Smallest `yᵀ𝓜̃y` over unit tangent vectors `y ⊥ ∇g(x₀)`.
    pub tangent_min_form: f64,
    pub tangent_pass: bool,
}

fn hessian(g: &Jet2) -> SymMatrix {
    let mut h = SymMatrix::zeros(g.n);
    for j in 0..g.n {
        for k in j..g.n {
            h.set(j, k, g.hess_xx(j, k));
        }
    }
    h
}

/// Evaluates one candidate τ for the Hessian `h` of `g`.
pub fn check_tau(h: &SymMatrix, tau: f64) -> TauTrial {
    let m = SymMatrix::identity(h.dim()).add(&h.scale(-1.0 / tau));
    let min_eig = m.min_eigenvalue();
    TauTrial {
        tau,
        min_eig,
        accepted: min_eig >= PSD_FLOOR,
    }
}

/// Certifies `𝓜(ρ_tt) ≥ 0` for `ρ = e^{τt} − e^{τg(x)}` at `(g(x₀), x₀)`.
///
/// τ is the first power of two (from 1) making `I − τ⁻¹Hess g(x₀)`
/// positive definite. The tangent check draws `samples` unit vectors
/// orthogonal to `∇g(x₀)` from the counter generator seeded with `seed`.
pub fn psd_certificate(
    g: &dyn AnalyticFn,
    x0: &[f64],
    samples: usize,
    seed: u64,
) -> Result<PsdCertificate> {
    let n = x0.len();
    let t0 = g.value(&Point::new(0.0, x0));
    let p = Point::new(t0, x0);
    let gj = g.jet2(&p)?;
    let grad = &gj.grad_x[..n];
    let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(LabError::Precondition(format!(
            "|grad g(x0)| = {norm}, characteristic normalization needs 1"
        )));
    }
    let h = hessian(&gj);
    let mut trials = Vec::new();
    let mut tau = 1.0;
    let accepted = loop {
        let trial = check_tau(&h, tau);
        trials.push(trial);
        if trial.accepted {
            break trial;
        }
        tau *= 2.0;
        if tau > TAU_CAP {
            return Err(LabError::Search(format!(
                "no tau up to 2^20 makes I - Hess g/tau positive definite (last min eig {})",
                trial.min_eig
            )));
        }
    };
    let (t, xs) = p.coordinates(2);
    let gx = g.taylor(&p, 2);
    let rho = (t * tau).exp() - (gx * tau).exp();
    let rho_j = Jet2::from_taylor(&rho);
    let _ = xs;
    let mut m_tilde = SymMatrix::zeros(n);
    let mut closed = SymMatrix::zeros(n);
    let s = tau * tau * (tau * t0).exp();
    for j in 0..n {
        for k in j..n {
            let d = if j == k { 1.0 } else { 0.0 };
            m_tilde.set(j, k, d * rho_j.hess_tt + rho_j.hess_xx(j, k));
            closed.set(j, k, s * (d - grad[j] * grad[k] - gj.hess_xx(j, k) / tau));
        }
    }
    let m_full_min_eig = build_m(&rho_j, rho_j.hess_tt).min_eigenvalue();
    let mut rng = CounterRng::new(seed);
    let mut tangent_min_form = f64::INFINITY;
    let mut drawn = 0;
    while drawn < samples {
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let zg: f64 = z.iter().zip(grad).map(|(a, b)| a * b).sum();
        let y: Vec<f64> = z.iter().zip(grad).map(|(a, b)| a - zg * b).collect();
        let yn = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 1 {
            // the tangent space is {0}
            tangent_min_form = tangent_min_form.min(0.0);
            drawn += 1;
            continue;
        }
        if yn < 1e-12 {
            continue;
        }
        let y: Vec<f64> = y.iter().map(|v| v / yn).collect();
        tangent_min_form = tangent_min_form.min(m_tilde.quad_form(&y));
        drawn += 1;
    }
    Ok(PsdCertificate {
        tau,
        t0,
        trials,
        min_eig: accepted.min_eig,
        m_tilde,
        m_tilde_closed: closed,
        m_full_min_eig,
        tangent_samples: samples,
        tangent_min_form,
        tangent_pass: tangent_min_form >= -PSD_FLOOR,
    })
}

/// Which matrix condition to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionPreset {
    /// `ρ_t ≥ c₀` and `𝓜(ϱ₁)` non-negative definite.
    #[serde(rename = "A2.1")]
    A21,
    /// `𝓜(ϱ₂) − 3|ρ_t|‖b₁‖²I` positive definite.
    #[serde(rename = "A2.2")]
    A22,
    /// `ρ_t ≥ c₀` and `𝓜(ϱ₃)` positive definite.
    #[serde(rename = "A2.3")]
    A23,
}

/// Per-clause outcome of an assumption check.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub preset: AssumptionPreset,
    pub matrix: SymMatrix,
    pub min_eig: f64,
    pub matrix_pass: bool,
    pub rho_t: f64,
    /// `None` when the preset has no `ρ_t ≥ c₀` clause.
    pub c0_pass: Option<bool>,
    pub pass: bool,
}

/// Tests the preset's matrix condition at the point where `rho` was evaluated.
pub fn assumption_check(
    rho: &Jet2,
    varrho: f64,
    preset: AssumptionPreset,
    c0: f64,
    b1_norm: f64,
) -> AssumptionReport {
    let m = build_m(rho, varrho);
    let matrix = match preset {
        AssumptionPreset::A22 => {
            let pen = 3.0 * rho.grad_t.abs() * b1_norm * b1_norm;
            m.add(&SymMatrix::identity(m.dim()).scale(-pen))
        }
        _ => m,
    };
    let min_eig = matrix.min_eigenvalue();
    let scale = (0..matrix.dim())
        .map(|i| matrix.get(i, i).abs())
        .fold(1.0, f64::max);
    let matrix_pass = match preset {
        AssumptionPreset::A21 => min_eig >= -1e-12 * scale,
        _ => min_eig > 0.0,
    };
    let c0_pass = match preset {
        AssumptionPreset::A22 => None,
        _ => Some(rho.grad_t >= c0),
    };
    AssumptionReport {
        preset,
        matrix,
        min_eig,
        matrix_pass,
        rho_t: rho.grad_t,
        c0_pass,
        pass: matrix_pass && c0_pass.unwrap_or(true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{FnSpec, Monomial};

    #[test]
    fn flat_characteristic_accepts_tau_one() {
        let g = FnSpec::affine(0.0, 0.0, &[1.0, 0.0]);
        let c = psd_certificate(&g, &[0.5, 0.2], 50, 1).unwrap();
        assert_eq!(c.tau, 1.0);
        assert!(c.tangent_pass);
    }

    #[test]
    fn norm_at_two_zero() {
        let g = FnSpec::Norm { x0: vec![] };
        let c = psd_certificate(&g, &[2.0, 0.0], 50, 1).unwrap();
        assert_eq!(c.tau, 1.0);
        assert!((c.min_eig - 0.5).abs() < 1e-14);
        assert!(c.tangent_pass);
        for j in 0..2 {
            for k in 0..2 {
                let (a, b) = (c.m_tilde.get(j, k), c.m_tilde_closed.get(j, k));
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
        let h = SymMatrix::diagonal(&[0.0, 0.5]);
        assert!(!check_tau(&h, 0.25).accepted);
        assert!(!check_tau(&h, 0.5).accepted);
        assert!(check_tau(&h, 1.0).accepted);
    }

    #[test]
    fn hessian_eigenvalue_three_needs_tau_four() {
        // g = x₁ + 1.5 x₂²: unit gradient at x₂ = 0, Hess eigenvalues {0, 3}
        let g = FnSpec::Polynomial {
            terms: vec![
                Monomial { coef: 1.0, t: 0, x: vec![1, 0] },
                Monomial { coef: 1.5, t: 0, x: vec![0, 2] },
            ],
        };
        let c = psd_certificate(&g, &[0.3, 0.0], 50, 2).unwrap();
        assert_eq!(c.tau, 4.0);
        assert_eq!(c.trials.len(), 3);
    }

    #[test]
    fn non_unit_gradient_rejected() {
        let g = FnSpec::affine(0.0, 0.0, &[2.0]);
        assert!(matches!(psd_certificate(&g, &[0.0], 5, 1), Err(LabError::Precondition(_))));
    }

    fn jet(tt: f64, xx: f64, rt: f64) -> Jet2 {
        let mut j = Jet2::zero(1);
        j.hess_tt = tt;
        j.set_hess_xx(0, 0, xx);
        j.grad_t = rt;
        j
    }

    #[test]
    fn assumption_presets() {
        let r = assumption_check(&jet(0.0, 0.0, 1.0), 0.0, AssumptionPreset::A21, 0.5, 1.0);
        assert!(r.pass);
        let r = assumption_check(&jet(2.0, 2.0, 1.0 / 3.0), 0.0, AssumptionPreset::A22, 0.5, 1.0);
        assert!((r.min_eig - 1.0).abs() < 1e-15);
        assert!(r.pass);
        let r = assumption_check(&jet(1.0, -1.0, 1.0), 0.0, AssumptionPreset::A23, 0.5, 1.0);
        assert!(!r.pass);
        assert_eq!(r.min_eig, -1.0);
    }
}
