//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong in symbol construction, quantization,
/// or the dense linear-algebra layers.
#[derive(Debug, Error)]
pub enum CalcError {
    /// An evaluation produced NaN or an infinity on the sampled region.
    #[error("non-finite value at (x, xi) = ({x}, {xi})")]
    NonFiniteValue { x: f64, xi: f64 },

    /// Values of an inner symbol left the declared domain of an outer function.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// A term list did not step down by exactly one order per term.
    #[error("order mismatch: {0}")]
    OrderMismatch(String),

    /// The requested extraction or composition mixes quantization conventions.
    #[error("convention mismatch: {0}")]
    ConventionMismatch(String),

    /// A derivative of higher order than any supplier can produce was requested.
    #[error("derivative unavailable at order ({alpha}, {beta})")]
    DerivativeUnavailable { alpha: usize, beta: usize },

    /// The operation needs a homogeneous expansion and the symbol has none.
    #[error("symbol is not classical (no homogeneous expansion terms)")]
    NotClassical,

    /// The ellipticity lower bound failed on the sampled region.
    #[error("symbol is not elliptic: {0}")]
    NotElliptic(String),

    /// A scale matrix was too ill-conditioned to invert reliably.
    #[error("scale matrix near-singular: condition estimate {cond:.3e}")]
    SingularPs { cond: f64 },

    /// A dense solve hit a conditioning limit.
    #[error("near-singular solve: condition estimate {cond:.3e}")]
    NearSingular { cond: f64 },

    /// Spectral routines require a positive definite input.
    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    /// The quadrature contour came closer to the spectrum than the safety margin.
    #[error("contour touches spectrum: margin {margin:.3e} < {required:.3e}")]
    ContourTouchesSpectrum { margin: f64, required: f64 },

    /// A family inversion failed on the sampled parameter set.
    #[error("family not invertible: {0}")]
    NotInvertible(String),

    /// A plain matrix inversion failed outright.
    #[error("singular matrix: {0}")]
    Singular(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CalcError>;
