use thiserror::Error;

/// Errors surfaced by the numerical layers.
///
/// All numerical failure modes are reported, never silently regularized:
/// a singular steady-state system, an exactly cancelling denominator, or a
/// quadrature that fails its refinement check each carry enough context to
/// diagnose the offending parameter set.
#[derive(Debug, Error)]
pub enum SfwmError {
    /// The steady-state linear system is rank-deficient (e.g. all decay
    /// rates zero) or the solution failed its residual check.
    #[error("steady-state system is singular or ill-conditioned: {0}")]
    SingularSystem(String),

    /// A resonance denominator cancelled exactly (unphysical parameter set).
    #[error("degenerate denominator: |den| = {magnitude:.3e} below {threshold:.3e}")]
    DegenerateDenominator { magnitude: f64, threshold: f64 },

    /// Doubling the quadrature order changed the result more than the
    /// stability tolerance. Both values are kept for diagnostics.
    #[error(
        "quadrature not converged: coarse {coarse:.6e}, refined {fine:.6e}, \
         relative change {rel_change:.3e} (tolerance {tolerance:.1e})"
    )]
    QuadratureNotConverged {
        coarse: f64,
        fine: f64,
        rel_change: f64,
        tolerance: f64,
    },

    /// A sampling grid cannot resolve the requested structure.
    #[error("grid too coarse for {context}: need spacing <= {required:.6e}, got {actual:.6e}")]
    GridTooCoarse {
        context: &'static str,
        required: f64,
        actual: f64,
    },

    /// Normalizing by a zero noise floor is undefined; callers must handle
    /// the noise-free idealization explicitly.
    #[error("noise floor B = 0: normalized correlation (G2 + B)/B is undefined")]
    ZeroNoiseFloor,

    /// Histogram bins do not carry enough expected counts for the requested
    /// estimator.
    #[error("insufficient statistics: need expected counts >= {required}, worst bin has {worst:.2}")]
    InsufficientStatistics { required: f64, worst: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, SfwmError>;
