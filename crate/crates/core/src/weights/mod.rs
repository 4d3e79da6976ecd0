//! The weight family `θ = e^{λφ}`, the matrix `𝓜(ϱ)`, the auxiliary
//! quantities of the weighted energy identity and positivity certificates.

mod certificate;
mod frame;
mod matrix;
mod quantities;

pub use certificate::{
    assumption_check, check_tau, psd_certificate, AssumptionPreset, AssumptionReport,
    PsdCertificate, TauTrial, PSD_FLOOR, TAU_CAP,
};
pub(crate) use frame::build_frame;
pub use frame::{eval_frame, max_exponent, CarlemanFrame, FrameExpansions, WeightFamily, WeightParams};
pub use matrix::build_m;
pub use quantities::{
    d2_matrix_form, default_fit_lambdas, eval_d, eval_vn, expansion_fit, vn_terms, DQuantities,
    ExpansionReport, VnInputs,
};
