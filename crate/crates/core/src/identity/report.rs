use serde::Serialize;

use crate::field_kit::Point;
use crate::weights::WeightParams;

/// Both sides of a checked identity at one point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub point: Point,
    pub params: Option<WeightParams>,
}

impl IdentityReport {
    /// Passes iff `|lhs − rhs| ≤ tolerance · max(1, |lhs|, |rhs|)`.
    pub fn new(lhs: f64, rhs: f64, tolerance: f64, point: Point, params: Option<WeightParams>) -> Self {
        let residual = lhs - rhs;
        let scale = 1f64.max(lhs.abs()).max(rhs.abs());
        IdentityReport {
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual.abs() <= tolerance * scale,
            point,
            params,
        }
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual.abs() / 1f64.max(self.lhs.abs()).max(self.rhs.abs())
    }
}
