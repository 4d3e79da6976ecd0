use serde::{Deserialize, Serialize};

use crate::taylor::Taylor;

use super::grid::MAX_DIM;

/// A space-time point `(t, x)` with `x ∈ ℝⁿ`, `n ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: [f64; MAX_DIM],
    pub dim: usize,
}

impl Point {
    pub fn new(t: f64, x: &[f64]) -> Self {
        assert!(!x.is_empty() && x.len() <= MAX_DIM, "spatial dimension must be 1 or 2");
        let mut xs = [0.0; MAX_DIM];
        xs[..x.len()].copy_from_slice(x);
        Point {
            t,
            x: xs,
            dim: x.len(),
        }
    }

    pub fn space(&self) -> &[f64] {
        &self.x[..self.dim]
    }

    /// Coordinate expansions `(t, x₁, …)` around this point.
    pub fn coordinates(&self, order: usize) -> (Taylor, Vec<Taylor>) {
        Taylor::coordinates(self.t, self.space(), order)
    }
}

/// Value plus first and second space-time derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub n: usize,
    pub value: f64,
    pub grad_t: f64,
    pub grad_x: [f64; MAX_DIM],
    pub hess_tt: f64,
    pub hess_tx: [f64; MAX_DIM],
    /// Upper triangle `(xx₁₁, xx₁₂, xx₂₂)`.
    hess_xx: [f64; 3],
}

impl Jet2 {
    pub fn zero(n: usize) -> Self {
        Jet2 {
            n,
            value: 0.0,
            grad_t: 0.0,
            grad_x: [0.0; MAX_DIM],
            hess_tt: 0.0,
            hess_tx: [0.0; MAX_DIM],
            hess_xx: [0.0; 3],
        }
    }

    fn tri(j: usize, k: usize) -> usize {
        match (j.min(k), j.max(k)) {
            (0, 0) => 0,
            (0, 1) => 1,
            _ => 2,
        }
    }

    pub fn hess_xx(&self, j: usize, k: usize) -> f64 {
        self.hess_xx[Self::tri(j, k)]
    }

    pub fn set_hess_xx(&mut self, j: usize, k: usize, v: f64) {
        self.hess_xx[Self::tri(j, k)] = v;
    }

    /// Reads the jet off an expansion valid to at least second order.
    pub fn from_taylor(f: &Taylor) -> Self {
        let n = f.nvars() - 1;
        let mut j = Jet2::zero(n);
        j.value = f.value();
        j.grad_t = f.d(&[0]);
        j.hess_tt = f.d(&[0, 0]);
        for a in 0..n {
            j.grad_x[a] = f.d(&[a + 1]);
            j.hess_tx[a] = f.d(&[0, a + 1]);
            for b in a..n {
                j.set_hess_xx(a, b, f.d(&[a + 1, b + 1]));
            }
        }
        j
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.n).map(|a| self.hess_xx(a, a)).sum()
    }

    pub fn grad_x_norm2(&self) -> f64 {
        self.grad_x[..self.n].iter().map(|g| g * g).sum()
    }

    /// Scales every entry by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.grad_t *= s;
        self.hess_tt *= s;
        for a in 0..MAX_DIM {
            self.grad_x[a] *= s;
            self.hess_tx[a] *= s;
        }
        for h in self.hess_xx.iter_mut() {
            *h *= s;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_is_symmetric_by_storage() {
        let mut j = Jet2::zero(2);
        j.set_hess_xx(1, 0, 3.5);
        assert_eq!(j.hess_xx(0, 1), j.hess_xx(1, 0));
    }

    #[test]
    fn jet_from_expansion() {
        let p = Point::new(1.0, &[2.0, -1.0]);
        let (t, x) = p.coordinates(2);
        let f = t * x[0] * x[1] + x[0] * x[0];
        let j = Jet2::from_taylor(&f);
        assert_eq!(j.value, -2.0 + 4.0);
        assert_eq!(j.grad_t, -2.0);
        assert_eq!(j.grad_x, [-1.0 + 4.0, 2.0]);
        assert_eq!(j.hess_tx, [-1.0, 2.0]);
        assert_eq!(j.hess_xx(0, 0), 2.0);
        assert_eq!(j.hess_xx(0, 1), 1.0);
        assert_eq!(j.laplacian(), 2.0);
    }
}
