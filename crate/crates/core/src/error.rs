use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The evaluation hit a spectral singularity to machine precision.
    #[error("singular point at xi = {xi}, ka = {ka}")]
    SingularPoint { xi: f64, ka: f64 },

    /// The boundary-matching system of a layer stack is singular.
    #[error("singular point: scattering system is singular at k = {k}")]
    SingularStack { k: f64 },

    /// The result is finite mathematically but does not fit in an f64.
    #[error("value not representable: {0}")]
    Unrepresentable(String),

    /// A finite-difference stencil touches a flagged singular sample.
    #[error("near-singular derivative at xi = {xi}, ka = {ka}")]
    NearSingularDerivative { xi: f64, ka: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no solution found: {0}")]
    NotFound(String),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
