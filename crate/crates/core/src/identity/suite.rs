use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field_kit::{derive_seed, CounterRng, FnSpec, Point};
use crate::weights::{
    eval_d, eval_frame, expansion_fit, DQuantities, ExpansionReport, WeightFamily, WeightParams,
};

use super::cutoff::CutoffSpec;
use super::pointwise::{conjugation_residual, identity_residual, ConjugationReport};
use super::report::IdentityReport;

/// Largest `|λφ|` admitted by the random suites.
pub const SUITE_EXPONENT_CAP: f64 = 20.0;

const MAX_DRAWS: usize = 1000;

/// One randomized configuration: functions from the built-in registry,
/// weight parameters and an evaluation point.
#[derive(Clone, Debug, Serialize)]
pub struct RandomCase {
    pub index: usize,
    pub w: FnSpec,
    pub rho: FnSpec,
    pub varrho: FnSpec,
    pub params: WeightParams,
    pub point: Point,
}

impl RandomCase {
    pub fn family(&self) -> WeightFamily {
        WeightFamily::new(Arc::new(self.rho.clone()), Arc::new(self.varrho.clone()), self.params)
    }
}

fn point(rng: &mut CounterRng, n: usize) -> Point {
    let x: Vec<f64> = (0..n).map(|_| rng.uniform(-0.5, 0.5)).collect();
    Point::new(rng.uniform(-0.5, 0.5), &x)
}

/// Draws case `index` of the suite seeded by `seed`: dimension 1 or 2,
/// `γ ∈ [1, 4]`, `λ ∈ [1, 16]`, `μ ∈ [0, 1]`, redrawn until `|λφ| ≤ 20`.
pub fn random_case(seed: u64, index: usize) -> Result<RandomCase> {
    let mut rng = CounterRng::new(derive_seed(seed, index as u64));
    for _ in 0..MAX_DRAWS {
        let n = 1 + (rng.next_u64() % 2) as usize;
        let w = FnSpec::random(&mut rng, n);
        let rho = FnSpec::random(&mut rng, n);
        let varrho = FnSpec::random(&mut rng, n);
        let center = point(&mut rng, n);
        let params = WeightParams::new(
            rng.uniform(1.0, 16.0),
            rng.uniform(1.0, 4.0),
            rng.uniform(0.0, 1.0),
            center,
        )?;
        let p = point(&mut rng, n);
        let Ok(frame) = eval_frame(&rho, &varrho, &p, &params) else {
            continue;
        };
        if frame.ell.abs() <= SUITE_EXPONENT_CAP {
            return Ok(RandomCase {
                index,
                w,
                rho,
                varrho,
                params,
                point: p,
            });
        }
    }
    Err(LabError::Search(format!("case {index}: no draw with |lambda*phi| <= 20")))
}

pub fn random_cases(seed: u64, count: usize) -> Result<Vec<RandomCase>> {
    (0..count).map(|i| random_case(seed, i)).collect()
}

/// Pointwise identity on `count` random cases.
pub fn identity_suite(seed: u64, count: usize) -> Result<Vec<(RandomCase, IdentityReport)>> {
    random_cases(seed, count)?
        .into_par_iter()
        .map(|c| {
            let r = identity_residual(&c.w, &c.family(), &c.point)?;
            Ok((c, r))
        })
        .collect()
}

/// `𝓓` quantities on `count` random cases (the `w` of each case is unused).
pub fn d_suite(seed: u64, count: usize) -> Result<Vec<(RandomCase, DQuantities)>> {
    random_cases(seed, count)?
        .into_par_iter()
        .map(|c| {
            let f = eval_frame(&c.rho, &c.varrho, &c.point, &c.params)?;
            let q = eval_d(&f)?;
            Ok((c, q))
        })
        .collect()
}

/// λ-fits of `𝓐` and `𝓑` on `count` random cases.
pub fn expansion_suite(
    seed: u64,
    count: usize,
    lambdas: &[f64],
) -> Result<Vec<(RandomCase, ExpansionReport)>> {
    random_cases(seed, count)?
        .into_par_iter()
        .map(|c| {
            let r = expansion_fit(&c.rho, &c.varrho, &c.point, &c.params, lambdas)?;
            Ok((c, r))
        })
        .collect()
}

/// A conjugation case: the cutoff is placed so the point sits strictly
/// inside the transition band of `χ`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugationCase {
    pub case: RandomCase,
    pub cutoff: CutoffSpec,
}

pub fn conjugation_suite(
    seed: u64,
    count: usize,
) -> Result<Vec<(ConjugationCase, ConjugationReport)>> {
    let cases: Vec<ConjugationCase> = (0..count)
        .map(|i| {
            let mut rng = CounterRng::new(derive_seed(seed ^ 0xC07, i as u64));
            for k in 0..MAX_DRAWS {
                let case = random_case(seed, i * MAX_DRAWS + k)?;
                let f = eval_frame(&case.rho, &case.varrho, &case.point, &case.params)?;
                let eps = rng.uniform(0.1, 0.5);
                let c2 = f.phi - eps * rng.uniform(0.05, 0.95);
                if c2 > 0.0 && c2 < 1.0 {
                    return Ok(ConjugationCase {
                        case,
                        cutoff: CutoffSpec::new(c2, eps)?,
                    });
                }
            }
            Err(LabError::Search(format!("no transition-band draw for case {i}")))
        })
        .collect::<Result<_>>()?;
    cases
        .into_par_iter()
        .map(|c| {
            let r = conjugation_residual(&c.case.w, &c.case.family(), &c.cutoff, &c.case.point)?;
            Ok((c, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_reproducible_and_capped() {
        let a = random_cases(7, 10).unwrap();
        let b = random_cases(7, 10).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.w, y.w);
            assert_eq!(x.params, y.params);
        }
        for c in &a {
            let f = eval_frame(&c.rho, &c.varrho, &c.point, &c.params).unwrap();
            assert!(f.ell.abs() <= SUITE_EXPONENT_CAP);
        }
    }

    #[test]
    fn small_identity_suite_passes() {
        for (c, r) in identity_suite(1, 30).unwrap() {
            assert!(r.pass, "case {}: {r:?}", c.index);
        }
    }

    #[test]
    fn small_conjugation_suite_passes() {
        for (c, r) in conjugation_suite(2, 20).unwrap() {
            assert!(r.chi > 0.0 && r.chi < 1.0);
            assert!(r.pass(), "case {}: {r:?}", c.case.index);
        }
    }
}
