use crate::error::{LabError, Result};

use super::field::Field;

/// Second-order central difference operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOp {
    Laplacian,
    /// ∂/∂x_axis
    Gradient(usize),
}

/// Applies `op` at the node with flat index `index` (one-node margin required).
pub fn fd_apply(field: &Field, op: FdOp, index: usize) -> Result<f64> {
    let g = field.grid();
    if index >= field.len() || g.is_boundary(index) {
        return Err(LabError::OutOfStencil { index });
    }
    Ok(match op {
        FdOp::Laplacian => laplacian_unchecked(field, index),
        FdOp::Gradient(axis) => {
            if axis >= g.n {
                return Err(LabError::Precondition(format!(
                    "gradient axis {axis} exceeds dimension {}",
                    g.n
                )));
            }
            gradient_unchecked(field, axis, index)
        }
    })
}

/// Central second difference in time of three consecutive snapshots.
pub fn time_second_difference(
    prev: &Field,
    cur: &Field,
    next: &Field,
    dt: f64,
    index: usize,
) -> Result<f64> {
    if index >= cur.len() {
        return Err(LabError::OutOfStencil { index });
    }
    Ok((next[index] - 2.0 * cur[index] + prev[index]) / (dt * dt))
}

#[inline]
pub(crate) fn laplacian_unchecked(field: &Field, index: usize) -> f64 {
    let g = field.grid();
    let v = field.values();
    let inv = 1.0 / (g.dx * g.dx);
    let c = v[index];
    let mut acc = 0.0;
    for axis in 0..g.n {
        let s = g.stride(axis);
        acc += v[index + s] - 2.0 * c + v[index - s];
    }
    acc * inv
}

#[inline]
pub(crate) fn gradient_unchecked(field: &Field, axis: usize, index: usize) -> f64 {
    let g = field.grid();
    let v = field.values();
    let s = g.stride(axis);
    (v[index + s] - v[index - s]) / (2.0 * g.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_kit::{make_grid, FnSpec, Monomial};

    #[test]
    fn laplacian_exact_on_quadratic() {
        let g = make_grid(&[(-1.0, 1.0)], 0.1, 0.05, 1.0, None).unwrap();
        let f = FnSpec::Polynomial {
            terms: vec![Monomial {
                coef: 1.0,
                t: 0,
                x: vec![2],
            }],
        };
        let u = Field::sample(&g, &f, 0.0);
        for k in 1..g.node_count() - 1 {
            assert!((fd_apply(&u, FdOp::Laplacian, k).unwrap() - 2.0).abs() < 1e-10);
        }
        assert!(matches!(
            fd_apply(&u, FdOp::Laplacian, 0),
            Err(LabError::OutOfStencil { index: 0 })
        ));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = make_grid(&[(0.0, 1.0), (0.0, 1.0)], 0.25, 0.1, 1.0, None).unwrap();
        let u = Field::sample(&g, &FnSpec::constant(3.0), 0.0);
        let k = g.flat([2, 2]);
        assert_eq!(fd_apply(&u, FdOp::Gradient(0), k).unwrap(), 0.0);
        assert_eq!(fd_apply(&u, FdOp::Gradient(1), k).unwrap(), 0.0);
    }

    fn sin_error(dx: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let g = make_grid(&[(0.0, 1.0)], dx, dx / 2.0, 1.0, None).unwrap();
        let f = FnSpec::sin(FnSpec::affine(0.0, 0.0, &[pi]));
        let u = Field::sample(&g, &f, 0.0);
        let k = (0.5 / dx).round() as usize;
        (fd_apply(&u, FdOp::Laplacian, k).unwrap() + pi * pi).abs()
    }

    #[test]
    fn laplacian_of_sine_is_second_order() {
        let e1 = sin_error(0.02);
        let e2 = sin_error(0.01);
        let ratio = e1 / e2;
        assert!(e1 < 10.0 * 0.02 * 0.02 * 10.0);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn time_difference_of_quadratic() {
        let g = make_grid(&[(0.0, 1.0)], 0.5, 0.1, 1.0, None).unwrap();
        let f = FnSpec::Polynomial {
            terms: vec![Monomial {
                coef: 1.0,
                t: 2,
                x: vec![],
            }],
        };
        let dt = 0.1;
        let a = Field::sample(&g, &f, 0.0);
        let b = Field::sample(&g, &f, dt);
        let c = Field::sample(&g, &f, 2.0 * dt);
        assert!((time_second_difference(&a, &b, &c, dt, 1).unwrap() - 2.0).abs() < 1e-10);
    }
}
