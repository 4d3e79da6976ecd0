//! Numerical laboratory for the linear stochastic wave equation
//! `du_t − Δu dt = (a₁u_t + a₂·∇u + a₃u) dt + (b₁u_t + b₂u + f) dW`
//! and its Carleman weight machinery.

pub mod cone;
pub mod error;
pub mod field_kit;
pub mod identity;
pub mod linalg;
pub mod propagation;
pub mod solver;
pub mod taylor;
pub mod weights;

pub use error::{LabError, Result};
pub use field_kit::{AnalyticFn, BrownianPath, Field, FnSpec, Grid, Jet2, Point};
pub use linalg::SymMatrix;
pub use taylor::Taylor;
