//! Small dense symmetric matrices and least-squares fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Largest supported dimension (`1 + n` with `n ≤ 2`).
pub const MAX_SYM: usize = 3;

/// Convergence threshold for the Jacobi sweeps, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense symmetric matrix of dimension ≤ 3; symmetry holds by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    a: [[f64; MAX_SYM]; MAX_SYM],
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_SYM).contains(&dim), "dimension must be 1..=3");
        SymMatrix {
            dim,
            a: [[0.0; MAX_SYM]; MAX_SYM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[i][i] = v;
        }
        m
    }

    /// Builds from the full row-major entries, checking exact symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != rows.len() {
                return Err(LabError::Precondition("matrix is not square".into()));
            }
            for (j, &v) in r.iter().enumerate() {
                if rows[j][i] != v {
                    return Err(LabError::Precondition(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
                m.a[i][j] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        let mut m = *self;
        for row in m.a.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }

    /// `yᵀ A y`
    pub fn quad_form(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += y[i] * self.a[i][j] * y[j];
            }
        }
        acc
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.a[i][..self.dim].to_vec()).collect()
    }

    fn off_norm2(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.a[i][j] * self.a[i][j];
                }
            }
        }
        s
    }

    fn frob2(&self) -> f64 {
        self.a[..self.dim]
            .iter()
            .flat_map(|r| r[..self.dim].iter())
            .map(|v| v * v)
            .sum()
    }

    /// Eigenvalues by cyclic Jacobi rotations, sorted ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.a;
        let scale = self.frob2();
        let tol2 = JACOBI_TOL * JACOBI_TOL * scale;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let m = SymMatrix { dim: n, a };
            if m.off_norm2() <= tol2 || scale == 0.0 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Least-squares polynomial fit; returns coefficients `c[0] + c[1]x + …`.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(LabError::Precondition(format!(
            "need more than {degree} samples for a degree-{degree} fit, got {}",
            xs.len()
        )));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| LabError::Precondition(format!("least squares failed: {e}")))?;
    Ok((0..=degree).map(|j| c[j] / scale.powi(j as i32)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let m = SymMatrix::diagonal(&[3.0, -1.0, 2.0]);
        assert_eq!(m.eigenvalues(), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = m.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_rows_rejected() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn polyfit_recovers_cubic() {
        let xs: Vec<f64> = (4..10).map(|k| 2f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x * x * x - 2.0 * x * x + x - 7.0).collect();
        let c = polyfit(&xs, &ys, 3).unwrap();
        assert!((c[3] - 0.5).abs() < 1e-12);
        assert!((c[2] + 2.0).abs() < 1e-9);
    }
}
