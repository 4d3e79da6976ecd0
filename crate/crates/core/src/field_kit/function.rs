use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::taylor::{Scalar, Taylor, MAX_ORDER};

use super::brownian::CounterRng;
use super::jet::{Jet2, Point};

/// A smooth scalar function of `(t, x)` that can report exact derivatives.
pub trait AnalyticFn: Send + Sync + Debug {
    /// Taylor expansion at `p`, valid to `min(order, max_order())`.
    fn taylor(&self, p: &Point, order: usize) -> Taylor;

    fn value(&self, p: &Point) -> f64 {
        self.taylor(p, 0).value()
    }

    /// Highest derivative order this function can supply.
    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    /// Expansion to exactly `order`, or a capability error.
    fn expand(&self, p: &Point, order: usize, what: &str) -> Result<Taylor> {
        if order > self.max_order() {
            return Err(LabError::Capability {
                what: what.to_string(),
                needed: order,
                available: self.max_order(),
            });
        }
        Ok(self.taylor(p, order))
    }

    fn jet2(&self, p: &Point) -> Result<Jet2> {
        Ok(Jet2::from_taylor(&self.expand(p, 2, "jet2")?))
    }
}

impl<F: AnalyticFn + ?Sized> AnalyticFn for Arc<F> {
    fn taylor(&self, p: &Point, order: usize) -> Taylor {
        (**self).taylor(p, order)
    }
    fn value(&self, p: &Point) -> f64 {
        (**self).value(p)
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
}

/// Monomial `coef · t^t · x₁^x[0] · x₂^x[1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    #[serde(default)]
    pub t: u8,
    #[serde(default)]
    pub x: Vec<u8>,
}

/// Closed-form built-in functions, composable and serializable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    Constant {
        value: f64,
    },
    /// `c0 + ct·t + cx·x`
    Affine {
        #[serde(default)]
        c0: f64,
        #[serde(default)]
        ct: f64,
        #[serde(default)]
        cx: Vec<f64>,
    },
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// `c + at·(t − t0)² + ax·|x − x0|²`
    Quadric {
        #[serde(default)]
        c: f64,
        at: f64,
        ax: f64,
        #[serde(default)]
        t0: f64,
        #[serde(default)]
        x0: Vec<f64>,
    },
    Exp {
        arg: Box<FnSpec>,
    },
    Sin {
        arg: Box<FnSpec>,
    },
    Cos {
        arg: Box<FnSpec>,
    },
    Sum {
        terms: Vec<FnSpec>,
    },
    Product {
        factors: Vec<FnSpec>,
    },
    Scale {
        factor: f64,
        f: Box<FnSpec>,
    },
    /// `|x − x0|`
    Norm {
        #[serde(default)]
        x0: Vec<f64>,
    },
    /// `(1 − |x − center|²/radius²)^power` inside the ball, zero outside.
    SpatialBump {
        center: Vec<f64>,
        radius: f64,
        power: i32,
    },
    /// `(1 − ((t − t0)² + |x − x0|²)/radius²)^power` inside, zero outside.
    SpacetimeBump {
        t0: f64,
        x0: Vec<f64>,
        radius: f64,
        power: i32,
    },
}

fn coord(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(0.0)
}

impl FnSpec {
    pub fn constant(value: f64) -> Self {
        FnSpec::Constant { value }
    }

    pub fn affine(c0: f64, ct: f64, cx: &[f64]) -> Self {
        FnSpec::Affine {
            c0,
            ct,
            cx: cx.to_vec(),
        }
    }

    /// The coordinate function `t`.
    pub fn time() -> Self {
        Self::affine(0.0, 1.0, &[])
    }

    pub fn exp(arg: FnSpec) -> Self {
        FnSpec::Exp { arg: Box::new(arg) }
    }

    pub fn sin(arg: FnSpec) -> Self {
        FnSpec::Sin { arg: Box::new(arg) }
    }

    pub fn cos(arg: FnSpec) -> Self {
        FnSpec::Cos { arg: Box::new(arg) }
    }

    pub fn scale(factor: f64, f: FnSpec) -> Self {
        FnSpec::Scale {
            factor,
            f: Box::new(f),
        }
    }

    pub fn sum(terms: Vec<FnSpec>) -> Self {
        FnSpec::Sum { terms }
    }

    pub fn product(factors: Vec<FnSpec>) -> Self {
        FnSpec::Product { factors }
    }

    /// `e^{τt} − e^{τ g(x)}`, the level-set function of the characteristic
    /// construction.
    pub fn characteristic_exp(tau: f64, g: FnSpec) -> Self {
        Self::sum(vec![
            Self::exp(Self::scale(tau, Self::time())),
            Self::scale(-1.0, Self::exp(Self::scale(tau, g))),
        ])
    }

    /// Checks vector lengths against the spatial dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        let check = |name: &str, v: &[f64]| {
            if v.len() > n {
                Err(LabError::Config(format!(
                    "{name} has {} entries for spatial dimension {n}",
                    v.len()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            FnSpec::Constant { .. } => Ok(()),
            FnSpec::Affine { cx, .. } => check("affine cx", cx),
            FnSpec::Polynomial { terms } => {
                for m in terms {
                    if m.x.len() > n {
                        return Err(LabError::Config(format!(
                            "monomial exponent list longer than dimension {n}"
                        )));
                    }
                }
                Ok(())
            }
            FnSpec::Quadric { x0, .. } => check("quadric x0", x0),
            FnSpec::Exp { arg } | FnSpec::Sin { arg } | FnSpec::Cos { arg } => arg.validate(n),
            FnSpec::Sum { terms } => terms.iter().try_for_each(|f| f.validate(n)),
            FnSpec::Product { factors } => factors.iter().try_for_each(|f| f.validate(n)),
            FnSpec::Scale { f, .. } => f.validate(n),
            FnSpec::Norm { x0 } => check("norm x0", x0),
            FnSpec::SpatialBump {
                center,
                radius,
                power,
            } => {
                check("bump center", center)?;
                bump_params(*radius, *power)
            }
            FnSpec::SpacetimeBump {
                x0, radius, power, ..
            } => {
                check("bump x0", x0)?;
                bump_params(*radius, *power)
            }
        }
    }

    /// Evaluates the closed form on doubles or on expansions.
    pub fn eval<S: Scalar>(&self, t: S, x: &[S]) -> S {
        match self {
            FnSpec::Constant { value } => t.constant_like(*value),
            FnSpec::Affine { c0, ct, cx } => {
                let mut acc = t * *ct + *c0;
                for (xi, &c) in x.iter().zip(cx.iter()) {
                    acc = acc + *xi * c;
                }
                acc
            }
            FnSpec::Polynomial { terms } => {
                let mut acc = t.constant_like(0.0);
                for m in terms {
                    let mut term = t.powi(m.t as i32) * m.coef;
                    for (xi, &p) in x.iter().zip(m.x.iter()) {
                        if p > 0 {
                            term = term * xi.powi(p as i32);
                        }
                    }
                    acc = acc + term;
                }
                acc
            }
            FnSpec::Quadric { c, at, ax, t0, x0 } => {
                let dt = t - *t0;
                let mut r2 = t.constant_like(0.0);
                for (i, xi) in x.iter().enumerate() {
                    let d = *xi - coord(x0, i);
                    r2 = r2 + d * d;
                }
                dt * dt * *at + r2 * *ax + *c
            }
            FnSpec::Exp { arg } => arg.eval(t, x).exp(),
            FnSpec::Sin { arg } => arg.eval(t, x).sin(),
            FnSpec::Cos { arg } => arg.eval(t, x).cos(),
            FnSpec::Sum { terms } => terms
                .iter()
                .fold(t.constant_like(0.0), |acc, f| acc + f.eval(t, x)),
            FnSpec::Product { factors } => factors
                .iter()
                .fold(t.constant_like(1.0), |acc, f| acc * f.eval(t, x)),
            FnSpec::Scale { factor, f } => f.eval(t, x) * *factor,
            FnSpec::Norm { x0 } => {
                let mut r2 = t.constant_like(0.0);
                for (i, xi) in x.iter().enumerate() {
                    let d = *xi - coord(x0, i);
                    r2 = r2 + d * d;
                }
                r2.sqrt()
            }
            FnSpec::SpatialBump {
                center,
                radius,
                power,
            } => {
                let mut r2 = t.constant_like(0.0);
                for (i, xi) in x.iter().enumerate() {
                    let d = *xi - coord(center, i);
                    r2 = r2 + d * d;
                }
                bump(r2 * (1.0 / (radius * radius)), *power)
            }
            FnSpec::SpacetimeBump {
                t0,
                x0,
                radius,
                power,
            } => {
                let dt = t - *t0;
                let mut r2 = dt * dt;
                for (i, xi) in x.iter().enumerate() {
                    let d = *xi - coord(x0, i);
                    r2 = r2 + d * d;
                }
                bump(r2 * (1.0 / (radius * radius)), *power)
            }
        }
    }

    /// Draws a random member of the built-in families for property checks:
    /// low-degree polynomials, exponentials of quadratics, trigonometric
    /// products and their sums.
    pub fn random(rng: &mut CounterRng, n: usize) -> FnSpec {
        let mut u = |lo: f64, hi: f64| rng.uniform(lo, hi);
        let kind = (u(0.0, 4.0).floor() as usize).min(3);
        match kind {
            0 => {
                let mut terms = Vec::new();
                for pt in 0..=3u8 {
                    for p1 in 0..=(3 - pt) {
                        let p2max = if n == 2 { 3 - pt - p1 } else { 0 };
                        for p2 in 0..=p2max {
                            let mut x = vec![p1];
                            if n == 2 {
                                x.push(p2);
                            }
                            terms.push(Monomial {
                                coef: u(-1.0, 1.0),
                                t: pt,
                                x,
                            });
                        }
                    }
                }
                FnSpec::Polynomial { terms }
            }
            1 => FnSpec::exp(FnSpec::Quadric {
                c: u(-0.5, 0.5),
                at: u(-0.5, 0.5),
                ax: u(-0.5, 0.5),
                t0: u(-0.5, 0.5),
                x0: (0..n).map(|_| u(-0.5, 0.5)).collect(),
            }),
            2 => {
                let mut factors = vec![FnSpec::sin(FnSpec::affine(u(-1.0, 1.0), u(-2.0, 2.0), &[]))];
                for a in 0..n {
                    let mut cx = vec![0.0; n];
                    cx[a] = u(-2.0, 2.0);
                    factors.push(FnSpec::cos(FnSpec::affine(u(-1.0, 1.0), 0.0, &cx)));
                }
                FnSpec::scale(u(0.5, 2.0), FnSpec::product(factors))
            }
            _ => {
                let cx: Vec<f64> = (0..n).map(|_| u(-1.0, 1.0)).collect();
                FnSpec::sum(vec![
                    FnSpec::affine(u(-1.0, 1.0), u(-1.0, 1.0), &cx),
                    FnSpec::scale(
                        u(-1.0, 1.0),
                        FnSpec::sin(FnSpec::affine(0.0, u(-1.5, 1.5), &cx)),
                    ),
                    FnSpec::scale(
                        u(-0.5, 0.5),
                        FnSpec::exp(FnSpec::affine(0.0, u(-0.5, 0.5), &cx)),
                    ),
                ])
            }
        }
    }
}

fn bump_params(radius: f64, power: i32) -> Result<()> {
    if !(radius > 0.0) || power < 1 {
        return Err(LabError::Config(format!(
            "bump needs radius > 0 and power >= 1, got {radius}, {power}"
        )));
    }
    Ok(())
}

fn bump<S: Scalar>(s: S, power: i32) -> S {
    if s.value() < 1.0 {
        (-s + 1.0).powi(power)
    } else {
        s.constant_like(0.0)
    }
}

impl AnalyticFn for FnSpec {
    fn taylor(&self, p: &Point, order: usize) -> Taylor {
        let (t, x) = p.coordinates(order.min(MAX_ORDER));
        self.eval(t, &x)
    }

    fn value(&self, p: &Point) -> f64 {
        self.eval(p.t, p.space())
    }
}

/// Restricts another function to derivatives of order at most `order`.
#[derive(Clone, Debug)]
pub struct JetOnly {
    pub inner: Arc<dyn AnalyticFn>,
    pub order: usize,
}

impl JetOnly {
    pub fn new(inner: Arc<dyn AnalyticFn>, order: usize) -> Self {
        JetOnly { inner, order }
    }
}

impl AnalyticFn for JetOnly {
    fn taylor(&self, p: &Point, order: usize) -> Taylor {
        self.inner
            .taylor(p, order.min(self.order))
            .truncate(self.order)
    }
    fn value(&self, p: &Point) -> f64 {
        self.inner.value(p)
    }
    fn max_order(&self) -> usize {
        self.order.min(self.inner.max_order())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jet(f: &FnSpec, p: &Point, h: f64) -> Jet2 {
        let n = p.dim;
        let at = |dt: f64, dx: [f64; 2]| {
            let mut x = p.x;
            x[0] += dx[0];
            x[1] += dx[1];
            f.value(&Point::new(p.t + dt, &x[..n]))
        };
        let mut j = Jet2::zero(n);
        let f0 = at(0.0, [0.0; 2]);
        j.value = f0;
        j.grad_t = (at(h, [0.0; 2]) - at(-h, [0.0; 2])) / (2.0 * h);
        j.hess_tt = (at(h, [0.0; 2]) - 2.0 * f0 + at(-h, [0.0; 2])) / (h * h);
        for a in 0..n {
            let mut e = [0.0; 2];
            e[a] = h;
            let m = [-e[0], -e[1]];
            j.grad_x[a] = (at(0.0, e) - at(0.0, m)) / (2.0 * h);
            j.hess_tx[a] = (at(h, e) - at(h, m) - at(-h, e) + at(-h, m)) / (4.0 * h * h);
            for b in a..n {
                let mut eb = [0.0; 2];
                eb[b] = h;
                let pp = [e[0] + eb[0], e[1] + eb[1]];
                let pm = [e[0] - eb[0], e[1] - eb[1]];
                let mp = [-e[0] + eb[0], -e[1] + eb[1]];
                let mm = [-e[0] - eb[0], -e[1] - eb[1]];
                j.set_hess_xx(a, b, (at(0.0, pp) - at(0.0, pm) - at(0.0, mp) + at(0.0, mm)) / (4.0 * h * h));
            }
        }
        j
    }

    fn close(a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= 1e-6 * scale.max(1.0)
    }

    #[test]
    fn jets_match_central_differences() {
        let mut rng = CounterRng::new(7);
        for case in 0..100 {
            let n = 1 + case % 2;
            let f = FnSpec::random(&mut rng, n);
            let x: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let p = Point::new(rng.uniform(-1.0, 1.0), &x);
            let exact = f.jet2(&p).unwrap();
            let fd = fd_jet(&f, &p, 1e-4);
            let s = exact.value.abs();
            assert!(close(exact.value, fd.value, s));
            assert!(close(exact.grad_t, fd.grad_t, s), "{f:?}");
            assert!(close(exact.hess_tt, fd.hess_tt, s), "{f:?}");
            for a in 0..n {
                assert!(close(exact.grad_x[a], fd.grad_x[a], s));
                assert!(close(exact.hess_tx[a], fd.hess_tx[a], s));
                for b in a..n {
                    assert!(close(exact.hess_xx(a, b), fd.hess_xx(a, b), s));
                }
            }
        }
    }

    #[test]
    fn bump_vanishes_outside() {
        let f = FnSpec::SpatialBump {
            center: vec![0.0],
            radius: 0.2,
            power: 4,
        };
        assert_eq!(f.value(&Point::new(0.0, &[0.3])), 0.0);
        assert_eq!(f.value(&Point::new(0.0, &[0.0])), 1.0);
    }

    #[test]
    fn jet_only_reports_capability() {
        let f: Arc<dyn AnalyticFn> = Arc::new(FnSpec::exp(FnSpec::time()));
        let j = JetOnly::new(f, 2);
        let p = Point::new(0.0, &[0.0]);
        assert!(j.expand(&p, 2, "rho").is_ok());
        assert!(matches!(
            j.expand(&p, 4, "rho"),
            Err(LabError::Capability { needed: 4, available: 2, .. })
        ));
        assert_eq!(j.taylor(&p, 4).order(), 2);
    }

    #[test]
    fn config_round_trip() {
        let f = FnSpec::characteristic_exp(2.0, FnSpec::Norm { x0: vec![] });
        let s = serde_json::to_string(&f).unwrap();
        let back: FnSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
        assert!(serde_json::from_str::<FnSpec>(r#"{"kind":"constant","value":1,"extra":2}"#).is_err());
    }
}
