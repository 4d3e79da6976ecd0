//! Numerical checks of the weighted energy identity, the conjugation and
//! cutoff identities, quadratic-variation bookkeeping and both sides of the
//! Carleman estimates on manufactured inputs.

mod cutoff;
mod inequality;
mod pointwise;
mod qv;
mod report;
mod suite;

pub use cutoff::CutoffSpec;
pub use inequality::{
    fix_local_parameters, inequality_gap, t42_kappa, GapReport, GapRow, InequalityPreset,
    InequalitySetup, LocalParameters, Region,
};
pub use pointwise::{conjugation_residual, identity_residual, ConjugationReport, IDENTITY_TOL};
pub use qv::{qv_check, QvReport, QV_MIN_PATHS, QV_TOL};
pub use report::IdentityReport;
pub use suite::{
    conjugation_suite, d_suite, expansion_suite, identity_suite, random_case, random_cases,
    ConjugationCase, RandomCase, SUITE_EXPONENT_CAP,
};
