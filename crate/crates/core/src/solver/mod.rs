//! Explicit time stepping for
//! `du_t − Δu dt = (a₁u_t + a₂·∇u + a₃u) dt + (b₁u_t + b₂u + f) dW`
//! on a uniform grid with one scalar Brownian motion.

mod coefficients;
mod scheme;
mod state;

pub use coefficients::{manufactured_forcing, Coef, Coefficients, ManufacturedForcing};
pub use scheme::{leapfrog, solve, step, Boundary, SolveOptions, NOISE_GUARD, SUPPORT_REACH_TOL};
pub use state::{total_energy, FieldPath, WaveState};
pub(crate) use state::{energy_density, trapezoid_weight};
