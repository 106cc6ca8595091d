use alloc::string::String;

use crate::vector::Point3;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Evaluation point inside the exclusion ball of a point source.
    #[error(
        "point {point:?} is within {distance:e} of charge {index} (exclusion radius {radius:e})"
    )]
    SingularPoint {
        point: Point3,
        index: usize,
        distance: f64,
        radius: f64,
    },

    /// The Lorentz scalar (or a derived quantity) left the model's domain.
    #[error("{model}: s = {s} is outside the model domain ({reason})")]
    DomainViolation {
        model: &'static str,
        s: f64,
        reason: &'static str,
    },

    #[error("lambert_w: negative argument {0}")]
    NegativeArgument(f64),

    #[error("cubic (g+a)^2 a = {sigma2} with g = {gamma} has no nonnegative root")]
    NoNonnegativeRoot { gamma: f64, sigma2: f64 },

    #[error("target {target} not enclosed by [{lo}, {hi}] (g(lo) = {g_lo}, g(hi) = {g_hi})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        target: f64,
    },

    #[error("constitutive inversion failed: {0}")]
    InversionFailure(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
