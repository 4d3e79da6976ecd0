//! Grids, discrete fields, analytic functions with exact jets, stencils and
//! reproducible Brownian increments.

pub mod brownian;
mod field;
mod function;
mod grid;
mod jet;
mod stencil;

pub use brownian::{derive_seed, sample_brownian, BrownianPath, CounterRng};
pub use field::Field;
pub use function::{AnalyticFn, FnSpec, JetOnly, Monomial};
pub use grid::{default_cfl, make_grid, Grid, MAX_DIM};
pub use jet::{Jet2, Point};
pub use stencil::{fd_apply, time_second_difference, FdOp};
pub(crate) use stencil::{gradient_unchecked, laplacian_unchecked};
