use thiserror::Error;

/// Errors raised by the geometry, flow and residual routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the half-space `theta2 < 0` or is otherwise invalid.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature is degenerate: {0}")]
    QuadratureDegenerate(String),

    /// A finite-difference stencil could not be placed inside the manifold.
    #[error("finite-difference stencil leaves the manifold: {0}")]
    Stencil(String),

    #[error("bundle map image leaves the manifold: {0}")]
    ImageDomain(String),

    /// An integral curve reached the boundary `theta2 = 0` or diverged.
    #[error("flow left the domain at s = {s}")]
    DomainExit { s: f64 },

    #[error("grid has {got} points, need at least {need}")]
    GridTooSmall { got: usize, need: usize },

    #[error("pole in xi denominator: |beta5 + u| = {0:e}")]
    Pole(f64),

    #[error("wavefunction exponent {0} exceeds the overflow limit")]
    Overflow(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
