//! Truncated multivariate Taylor polynomials.
//!
//! A [`Taylor`] value holds the Taylor coefficients of a smooth function of
//! up to three variables `(t, x₁, x₂)` around a fixed expansion point, up to
//! total degree four. Arithmetic and the elementary functions act on the
//! coefficient arrays directly, so every derivative read back from a result
//! is exact up to floating-point roundoff. No differencing is involved.
//!
//! Each value carries its *valid order*: the highest total degree whose
//! coefficients are exact. Differentiation lowers it by one and binary
//! operations take the minimum, so reading a derivative the inputs cannot
//! support is detected instead of silently returning zero.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use crate::error::{LabError, Result};

/// Number of independent variables (time plus at most two space axes).
pub const MAX_VARS: usize = 3;
/// Highest total degree carried.
pub const MAX_ORDER: usize = 4;
/// Number of monomials of degree ≤ 4 in three variables.
pub const NCOEF: usize = 35;

const INVALID: u8 = u8::MAX;

struct Tables {
    exps: [[u8; MAX_VARS]; NCOEF],
    degree: [u8; NCOEF],
    index: [[[u8; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1],
    factorial: [f64; NCOEF],
    // products (i, j, k): monomial i times monomial j lands on k; one list
    // per (number of active variables, truncation order)
    mul: Vec<Vec<Vec<(u8, u8, u8)>>>,
    // active monomials per (nvars, order)
    active: Vec<Vec<Vec<u8>>>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exps = [[0u8; MAX_VARS]; NCOEF];
        let mut degree = [0u8; NCOEF];
        let mut index = [[[INVALID; MAX_ORDER + 1]; MAX_ORDER + 1]; MAX_ORDER + 1];
        let mut k = 0usize;
        for d in 0..=MAX_ORDER {
            for a in (0..=d).rev() {
                for b in (0..=(d - a)).rev() {
                    let c = d - a - b;
                    exps[k] = [a as u8, b as u8, c as u8];
                    degree[k] = d as u8;
                    index[a][b][c] = k as u8;
                    k += 1;
                }
            }
        }
        debug_assert_eq!(k, NCOEF);
        let fact = |n: u8| (1..=n as u64).product::<u64>() as f64;
        let mut factorial = [1.0; NCOEF];
        for (i, e) in exps.iter().enumerate() {
            factorial[i] = e.iter().map(|&p| fact(p)).product();
        }
        let uses_only = |e: &[u8; MAX_VARS], nvars: usize| e[nvars..].iter().all(|&p| p == 0);
        let mut mul = Vec::new();
        let mut active = Vec::new();
        for nvars in 0..=MAX_VARS {
            let mut per_order = Vec::new();
            let mut act_order = Vec::new();
            for order in 0..=MAX_ORDER {
                let mut list = Vec::new();
                for i in 0..NCOEF {
                    if !uses_only(&exps[i], nvars) || degree[i] as usize > order {
                        continue;
                    }
                    for j in 0..NCOEF {
                        if !uses_only(&exps[j], nvars)
                            || (degree[i] + degree[j]) as usize > order
                        {
                            continue;
                        }
                        let e = [
                            exps[i][0] + exps[j][0],
                            exps[i][1] + exps[j][1],
                            exps[i][2] + exps[j][2],
                        ];
                        let t = index[e[0] as usize][e[1] as usize][e[2] as usize];
                        list.push((i as u8, j as u8, t));
                    }
                }
                per_order.push(list);
                act_order.push(
                    (0..NCOEF)
                        .filter(|&i| uses_only(&exps[i], nvars) && degree[i] as usize <= order)
                        .map(|i| i as u8)
                        .collect(),
                );
            }
            mul.push(per_order);
            active.push(act_order);
        }
        Tables {
            exps,
            degree,
            index,
            factorial,
            mul,
            active,
        }
    })
}

fn monomial_index(e: [u8; MAX_VARS]) -> Option<usize> {
    if e.iter().map(|&p| p as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    let i = tables().index[e[0] as usize][e[1] as usize][e[2] as usize];
    (i != INVALID).then_some(i as usize)
}

/// Truncated Taylor expansion of a scalar function of `(t, x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor {
    c: [f64; NCOEF],
    order: i8,
    nvars: u8,
}

impl Taylor {
    /// The constant `value`, valid to `order`.
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        assert!((1..=MAX_VARS).contains(&nvars), "nvars must be 1..=3");
        assert!(order <= MAX_ORDER, "order must be ≤ 4");
        let mut c = [0.0; NCOEF];
        c[0] = value;
        Taylor {
            c,
            order: order as i8,
            nvars: nvars as u8,
        }
    }

    /// The coordinate function `z_var`, expanded around `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Self {
        assert!(var < nvars);
        let mut t = Self::constant(nvars, order, value);
        if order >= 1 {
            let mut e = [0u8; MAX_VARS];
            e[var] = 1;
            t.c[monomial_index(e).unwrap()] = 1.0;
        }
        t
    }

    /// Coordinate functions `(t, x₁, …, x_n)` expanded around a point.
    pub fn coordinates(t: f64, x: &[f64], order: usize) -> (Self, Vec<Self>) {
        let nvars = 1 + x.len();
        let tv = Self::variable(nvars, order, 0, t);
        let xs = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| Self::variable(nvars, order, i + 1, xi))
            .collect();
        (tv, xs)
    }

    /// A constant with the same shape as `self`.
    pub fn constant_like(&self, value: f64) -> Self {
        let mut c = [0.0; NCOEF];
        c[0] = value;
        Taylor {
            c,
            order: self.order.max(0),
            nvars: self.nvars,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    /// Highest degree whose coefficients are exact; negative once every
    /// coefficient has been differentiated away.
    pub fn order(&self) -> i32 {
        self.order as i32
    }

    /// Fails with a capability error unless the valid order reaches `needed`.
    pub fn require(&self, needed: usize, what: &str) -> Result<()> {
        if self.order < needed as i8 {
            return Err(LabError::Capability {
                what: what.to_string(),
                needed,
                available: self.order.max(0) as usize,
            });
        }
        Ok(())
    }

    /// Caps the valid order at `order` and zeroes higher coefficients.
    pub fn truncate(mut self, order: usize) -> Self {
        let order = order.min(MAX_ORDER) as i8;
        if order < self.order {
            self.order = order;
            let t = tables();
            for i in 0..NCOEF {
                if t.degree[i] as i8 > order {
                    self.c[i] = 0.0;
                }
            }
        }
        self
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative for the multi-index `alpha` over `(t, x₁, x₂)`.
    pub fn partial(&self, alpha: [u8; MAX_VARS]) -> f64 {
        let deg: u8 = alpha.iter().sum();
        debug_assert!(
            deg as i8 <= self.order,
            "derivative of degree {deg} exceeds valid order {}",
            self.order
        );
        match monomial_index(alpha) {
            Some(i) => self.c[i] * tables().factorial[i],
            None => 0.0,
        }
    }

    /// Derivative along the listed variables, e.g. `d(&[0, 1])` = ∂²/∂t∂x₁.
    pub fn d(&self, vars: &[usize]) -> f64 {
        let mut alpha = [0u8; MAX_VARS];
        for &v in vars {
            alpha[v] += 1;
        }
        self.partial(alpha)
    }

    /// First partial derivatives `(∂_t, ∂_{x₁}, …)`.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars()).map(|v| self.d(&[v])).collect()
    }

    /// ∂/∂z_var as a new expansion, valid to one order less.
    pub fn deriv(&self, var: usize) -> Self {
        debug_assert!(var < self.nvars());
        let t = tables();
        let mut out = [0.0; NCOEF];
        for k in 0..NCOEF {
            let mut e = t.exps[k];
            e[var] += 1;
            if let Some(s) = monomial_index(e) {
                out[k] = e[var] as f64 * self.c[s];
            }
        }
        let order = self.order - 1;
        let mut r = Taylor {
            c: out,
            order,
            nvars: self.nvars,
        };
        if order >= 0 {
            r = r.truncate(order as usize);
        }
        r
    }

    /// Time derivative.
    pub fn dt(&self) -> Self {
        self.deriv(0)
    }

    /// Spatial gradient as expansions.
    pub fn grad_x(&self) -> Vec<Self> {
        (1..self.nvars()).map(|v| self.deriv(v)).collect()
    }

    /// Spatial Laplacian.
    pub fn laplacian(&self) -> Self {
        let mut acc = self.deriv(1).deriv(1);
        for v in 2..self.nvars() {
            acc += self.deriv(v).deriv(v);
        }
        acc
    }

    fn order_usize(&self) -> usize {
        self.order.max(0) as usize
    }

    fn combine_order(a: i8, b: i8) -> i8 {
        a.min(b)
    }

    fn mul_impl(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.nvars, rhs.nvars, "mixed variable counts");
        let order = Self::combine_order(self.order, rhs.order);
        let t = tables();
        let list = &t.mul[self.nvars as usize][order.max(0) as usize];
        let mut out = [0.0; NCOEF];
        for &(i, j, k) in list {
            out[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Taylor {
            c: out,
            order,
            nvars: self.nvars,
        }
    }

    /// Evaluates `f(self)` given `derivs[k] = f⁽ᵏ⁾(self.value())`.
    pub fn compose(&self, derivs: &[f64; MAX_ORDER + 1]) -> Self {
        let order = self.order_usize();
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        out.order = self.order;
        let mut power = h;
        let mut fact = 1.0;
        for (k, &dk) in derivs.iter().enumerate().take(order + 1).skip(1) {
            fact *= k as f64;
            if dk != 0.0 {
                for i in 0..NCOEF {
                    out.c[i] += dk / fact * power.c[i];
                }
            }
            if k < order {
                power = power.mul_impl(&h);
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let a = self.c[0];
        self.compose(&[
            a.ln(),
            1.0 / a,
            -1.0 / (a * a),
            2.0 / (a * a * a),
            -6.0 / (a * a * a * a),
        ])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    pub fn sqrt(&self) -> Self {
        let a = self.c[0];
        let r = a.sqrt();
        self.compose(&[
            r,
            0.5 / r,
            -0.25 / (a * r),
            0.375 / (a * a * r),
            -0.9375 / (a * a * a * r),
        ])
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0];
        let r = 1.0 / a;
        self.compose(&[r, -r * r, 2.0 * r * r * r, -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => self.constant_like(1.0),
            1 => *self,
            _ if n > 0 => {
                let mut acc = *self;
                for _ in 1..n {
                    acc = acc.mul_impl(self);
                }
                acc
            }
            _ => self.recip().powi(-n),
        }
    }

    /// Coefficients of the active monomials, for tests and debugging.
    pub fn coefficients(&self) -> Vec<([u8; MAX_VARS], f64)> {
        let t = tables();
        t.active[self.nvars as usize][self.order_usize()]
            .iter()
            .map(|&i| (t.exps[i as usize], self.c[i as usize]))
            .collect()
    }
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: Taylor) -> Taylor {
        debug_assert_eq!(self.nvars, rhs.nvars);
        for i in 0..NCOEF {
            self.c[i] += rhs.c[i];
        }
        self.order = Self::combine_order(self.order, rhs.order);
        self
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: Taylor) -> Taylor {
        debug_assert_eq!(self.nvars, rhs.nvars);
        for i in 0..NCOEF {
            self.c[i] -= rhs.c[i];
        }
        self.order = Self::combine_order(self.order, rhs.order);
        self
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        self.mul_impl(&rhs)
    }
}

impl Div for Taylor {
    type Output = Taylor;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Taylor) -> Taylor {
        self.mul_impl(&rhs.recip())
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        for v in self.c.iter_mut() {
            *v = -*v;
        }
        self
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(mut self, rhs: f64) -> Taylor {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Taylor {
    type Output = Taylor;
    fn sub(mut self, rhs: f64) -> Taylor {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(mut self, rhs: f64) -> Taylor {
        for v in self.c.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl Div<f64> for Taylor {
    type Output = Taylor;
    fn div(self, rhs: f64) -> Taylor {
        self * (1.0 / rhs)
    }
}

impl AddAssign for Taylor {
    fn add_assign(&mut self, rhs: Taylor) {
        *self = *self + rhs;
    }
}

impl SubAssign for Taylor {
    fn sub_assign(&mut self, rhs: Taylor) {
        *self = *self - rhs;
    }
}

impl MulAssign for Taylor {
    fn mul_assign(&mut self, rhs: Taylor) {
        *self = self.mul_impl(&rhs);
    }
}

/// Arithmetic shared by plain doubles and Taylor expansions, so a single
/// closed-form definition yields both values and exact jets.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;
    fn constant_like(&self, c: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

impl Scalar for Taylor {
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn constant_like(&self, c: f64) -> Self {
        Taylor::constant_like(self, c)
    }
    fn exp(&self) -> Self {
        Taylor::exp(self)
    }
    fn ln(&self) -> Self {
        Taylor::ln(self)
    }
    fn sin(&self) -> Self {
        Taylor::sin(self)
    }
    fn cos(&self) -> Self {
        Taylor::cos(self)
    }
    fn sqrt(&self) -> Self {
        Taylor::sqrt(self)
    }
    fn powi(&self, n: i32) -> Self {
        Taylor::powi(self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count_and_factorials() {
        let t = tables();
        assert_eq!(t.exps[0], [0, 0, 0]);
        let i = monomial_index([2, 1, 1]).unwrap();
        assert_eq!(t.factorial[i], 2.0);
        assert!(monomial_index([3, 2, 0]).is_none());
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        // f = t²x + 3x³ at (t, x) = (2, -1)
        let (t, xs) = Taylor::coordinates(2.0, &[-1.0], 4);
        let x = xs[0];
        let f = t * t * x + x * x * x * 3.0;
        assert_eq!(f.value(), -4.0 - 3.0);
        assert_eq!(f.d(&[0]), -(2.0 * 2.0));
        assert_eq!(f.d(&[1]), 4.0 + 9.0);
        assert_eq!(f.d(&[0, 0]), -2.0);
        assert_eq!(f.d(&[0, 1]), 4.0);
        assert_eq!(f.d(&[1, 1]), -18.0);
        assert_eq!(f.d(&[0, 0, 1]), 2.0);
        assert_eq!(f.d(&[1, 1, 1]), 18.0);
        assert_eq!(f.d(&[0, 0, 1, 1]), 0.0);
    }

    #[test]
    fn exp_sin_sqrt_match_closed_forms() {
        let (t, xs) = Taylor::coordinates(0.3, &[0.7, -0.2], 4);
        let (x, y) = (xs[0], xs[1]);
        // exp(t·x) : ∂⁴/∂t²∂x² at the point
        let f = (t * x).exp();
        let (tv, xv) = (0.3f64, 0.7f64);
        let e = (tv * xv).exp();
        let exact = e * (2.0 + 4.0 * tv * xv + tv * tv * xv * xv);
        assert!((f.d(&[0, 0, 1, 1]) - exact).abs() < 1e-12);
        // sin(x)·cos(y)
        let g = x.sin() * y.cos();
        assert!((g.d(&[1, 1, 2]) - (-(0.7f64.sin()) * 0.2f64.sin())).abs() < 1e-14);
        // sqrt(x² + y²)
        let r = (x * x + y * y).sqrt();
        let rv = (0.49f64 + 0.04).sqrt();
        assert!((r.d(&[1]) - 0.7 / rv).abs() < 1e-14);
        assert!((r.d(&[2, 2]) - 0.49 / rv.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn derivative_lowers_order_and_capability_is_checked() {
        let (t, _) = Taylor::coordinates(1.0, &[0.0], 2);
        let f = t.exp();
        let g = f.dt().dt();
        assert_eq!(g.order(), 0);
        assert!(g.require(0, "g").is_ok());
        let h = g.dt();
        assert!(h.require(0, "h").is_err());
    }

    #[test]
    fn recip_and_ln_are_inverse_consistent() {
        let (t, xs) = Taylor::coordinates(1.5, &[2.0], 4);
        let f = t * xs[0] + 1.0;
        let one = f * f.recip();
        assert!((one.value() - 1.0).abs() < 1e-15);
        for (_, c) in one.coefficients().iter().skip(1) {
            assert!(c.abs() < 1e-14);
        }
        let back = f.ln().exp();
        for ((_, a), (_, b)) in back.coefficients().iter().zip(f.coefficients().iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
