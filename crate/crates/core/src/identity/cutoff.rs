use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::taylor::{Taylor, MAX_ORDER};

/// Cutoff `χ = S((φ − c₂)/ε)` with the quintic smoothstep
/// `S(s) = 6s⁵ − 15s⁴ + 10s³` on `[0, 1]`, 0 below and 1 above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub c2: f64,
    pub eps: f64,
}

/// `S` and its first four derivatives at `s ∈ [0, 1]`.
fn profile(s: f64) -> [f64; MAX_ORDER + 1] {
    let s2 = s * s;
    [
        s2 * s * (10.0 + s * (-15.0 + 6.0 * s)),
        30.0 * s2 * (1.0 - s) * (1.0 - s),
        60.0 * s * (1.0 + s * (-3.0 + 2.0 * s)),
        60.0 + s * (-360.0 + 360.0 * s),
        720.0 * s - 360.0,
    ]
}

impl CutoffSpec {
    pub fn new(c2: f64, eps: f64) -> Result<Self> {
        let c = CutoffSpec { c2, eps };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c2 > 0.0 && self.c2 < 1.0) || !(self.eps > 0.0) {
            return Err(LabError::Config(format!(
                "cutoff needs 0 < c2 < 1 and eps > 0, got c2 = {}, eps = {}",
                self.c2, self.eps
            )));
        }
        Ok(())
    }

    fn scaled(&self, phi: f64) -> f64 {
        (phi - self.c2) / self.eps
    }

    pub fn value(&self, phi: f64) -> f64 {
        let s = self.scaled(phi);
        if s <= 0.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else {
            profile(s)[0]
        }
    }

    /// `χ` as an expansion given the expansion of `φ`. Outside the
    /// transition band the result is an exact constant.
    pub fn expand(&self, phi: &Taylor) -> Taylor {
        let s = self.scaled(phi.value());
        if s <= 0.0 {
            return phi.constant_like(0.0);
        }
        if s >= 1.0 {
            return phi.constant_like(1.0);
        }
        let mut d = profile(s);
        let mut f = 1.0;
        for dk in d.iter_mut().skip(1) {
            f /= self.eps;
            *dk *= f;
        }
        phi.compose(&d)
    }

    /// Bounds on `|dᵏχ/dφᵏ|` for `k = 1, 2, 3`.
    pub fn derivative_bounds(&self) -> [f64; 3] {
        let e = self.eps;
        [1.875 / e, 10.0 / 3f64.sqrt() / (e * e), 60.0 / (e * e * e)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_endpoints() {
        let p0 = profile(0.0);
        let p1 = profile(1.0);
        assert_eq!(p0[..3], [0.0, 0.0, 0.0]);
        assert_eq!(p1[..3], [1.0, 0.0, 0.0]);
        assert_eq!(profile(0.5)[0], 0.5);
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let h = 1e-5;
        for &s in &[0.1, 0.3, 0.62, 0.9] {
            let (a, b) = (profile(s - h), profile(s + h));
            let p = profile(s);
            for k in 0..4 {
                let fd = (b[k] - a[k]) / (2.0 * h);
                assert!((fd - p[k + 1]).abs() < 1e-6 * p[k + 1].abs().max(1.0), "k={k} s={s}");
            }
        }
    }

    #[test]
    fn bounds_dominate_samples() {
        let c = CutoffSpec::new(0.5, 0.1).unwrap();
        let b = c.derivative_bounds();
        for i in 0..=1000 {
            let s = i as f64 / 1000.0;
            let p = profile(s);
            for k in 0..3 {
                assert!(p[k + 1].abs() / c.eps.powi(k as i32 + 1) <= b[k] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn invalid_spec() {
        assert!(CutoffSpec::new(1.0, 0.1).is_err());
        assert!(CutoffSpec::new(0.5, 0.0).is_err());
    }
}
