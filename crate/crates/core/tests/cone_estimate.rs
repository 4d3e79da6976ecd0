//! The cone-region estimate on a patch where its hypotheses hold.

use std::sync::Arc;

use carleman_core::cone::c3_constant;
use carleman_core::field_kit::FnSpec;
use carleman_core::identity::{inequality_gap, InequalityPreset, InequalitySetup, Region};
use carleman_core::weights::{WeightFamily, WeightParams};
use carleman_core::{LabError, Point};

// the weight changes by a factor of about e^3 per cell at lambda = 64
const H: f64 = 0.002;

fn setup(alpha: f64, c1: f64, b1: f64) -> InequalitySetup {
    let c3 = c3_constant(alpha, c1).unwrap();
    let rho = FnSpec::Quadric { c: 0.0, at: alpha / 2.0, ax: -1.0, t0: 0.0, x0: vec![0.0] };
    InequalitySetup {
        preset: InequalityPreset::T62 { alpha, c1, c3, t0: 0.0 },
        family: WeightFamily::new(
            Arc::new(rho),
            Arc::new(FnSpec::constant(2.0)),
            WeightParams::new(1.0, 1.0, 0.0, Point::new(0.0, &[0.0])).unwrap(),
        ),
        w: Arc::new(FnSpec::SpacetimeBump { t0: 3.0, x0: vec![0.0], radius: 0.2, power: 4 }),
        b1: Arc::new(FnSpec::constant(b1)),
        b2: Arc::new(FnSpec::constant(0.0)),
        region: Region { t: (2.75, 3.25), x: vec![(-0.25, 0.25)], h: H },
    }
}

#[test]
fn gap_is_nonnegative_inside_the_cone_region() {
    let s = setup(0.5, 10.0, 10.0);
    // the patch lies in {rho >= c3}
    let c3 = c3_constant(0.5, 10.0).unwrap();
    assert!(0.25 * 2.75f64.powi(2) - 0.0625 > c3);
    let r = inequality_gap(&s, &[8.0, 16.0, 32.0, 64.0]).unwrap();
    for row in &r.rows {
        assert!(row.gap >= 0.0, "lambda {}: lhs {} rhs {}", row.lambda, row.lhs, row.rhs);
    }
}

#[test]
fn ratio_is_stable_in_lambda() {
    let r = inequality_gap(&setup(0.5, 10.0, 10.0), &[16.0, 64.0]).unwrap();
    let q: Vec<f64> = r.rows.iter().map(|row| row.lhs / row.rhs).collect();
    assert!(q[0] > 2.0 && q[1] > 2.0, "{q:?}");
    assert!((q[0] / q[1] - 1.0).abs() < 0.2, "{q:?}");
}

#[test]
fn overflowing_weight_is_a_range_error() {
    // c3 = 4097, so psi = e^rho overflows on any patch where rho >= c3
    let mut s = setup(0.5, 1.0, 1.0);
    s.w = Arc::new(FnSpec::SpacetimeBump { t0: 130.0, x0: vec![0.0], radius: 0.2, power: 4 });
    s.region = Region { t: (129.75, 130.25), x: vec![(-0.25, 0.25)], h: 0.05 };
    let e = inequality_gap(&s, &[8.0]).unwrap_err();
    assert!(matches!(e, LabError::Range { .. }), "{e}");
}
