use thiserror::Error;

/// Errors raised by the lab's numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Invalid grid, coefficient or parameter configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The time step violates the CFL bound along the named axis.
    #[error("CFL violation on axis {axis}: dt = {dt} exceeds cfl*dx = {limit}")]
    Cfl { axis: usize, dt: f64, limit: f64 },

    /// A stencil was applied too close to the grid boundary.
    #[error("stencil at index {index} reaches outside the grid")]
    OutOfStencil { index: usize },

    /// `exp(λφ)` does not fit in a double.
    #[error("range error: lambda*phi = {lambda_phi} overflows exp")]
    Range { lambda_phi: f64 },

    /// A function cannot supply derivatives of the requested order.
    #[error("capability error: {what} needs derivatives of order {needed}, only {available} available")]
    Capability {
        what: String,
        needed: usize,
        available: usize,
    },

    /// A precondition on the inputs of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The explicit scheme produced a non-finite value.
    #[error("blow-up at step {step}: non-finite value")]
    BlowUp { step: usize },

    /// The discrete solution reached the Dirichlet boundary.
    #[error("propagation error at step {step}: support reached the boundary ring")]
    Propagation { step: usize },

    /// Not enough Monte Carlo samples for a statistic.
    #[error("statistics error: {0}")]
    Statistics(String),

    /// A manufactured field touches the edge of its integration region.
    #[error("support error: {0}")]
    Support(String),

    /// A sampled geometric containment claim failed.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Bounded search exhausted its cap.
    #[error("search error: {0}")]
    Search(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
