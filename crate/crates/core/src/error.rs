use thiserror::Error;

/// Errors raised by the library. Variants map onto the failure modes of the
/// individual operations; the CLI turns them into exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension m={0} (only m=1 and m=2 are implemented)")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integrand is not finite at quadrature node {node}")]
    IntegrationFailure { node: usize },

    #[error("the basepoint is not strictly interior (minimal facet support {min_support:e})")]
    OriginNotInterior { min_support: f64 },

    #[error("degenerate hull: {0}")]
    DegenerateHull(String),

    #[error("vertex {index} is not extreme in the Klein hull")]
    NonExtremeVertex { index: usize },

    #[error("vertex {index} has fewer than m incident facets")]
    DegenerateVertex { index: usize },

    #[error("direction {direction:?} has no support point within distance π/2")]
    UncoveredDirection { direction: Vec<f64> },

    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("exhaustive Alexandrov check refused for N={0} > 20 support points; use sampled mode")]
    TooManyForExhaustive(usize),

    #[error("measure fails the necessary conditions (total mass ok: {}, vertex ok: {}, Alexandrov ok: {})",
        .0.total_mass_ok, .0.vertex_ok, .0.alexandrov_ok)]
    PreconditionFailed(Box<crate::measures::ConditionReport>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that `m` is one of the implemented dimensions.
pub fn check_dim(m: usize) -> Result<()> {
    if m == 1 || m == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(m))
    }
}
