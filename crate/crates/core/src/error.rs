use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The wave number is at or beyond the critical wave number, so the
    /// operator has no isolated eigenvalue above the essential spectrum.
    #[error("no discrete spectrum: |k| = {k} >= k_crit = {k_crit}")]
    NoDiscreteSpectrum { k: f64, k_crit: f64 },

    /// `k = 0`: the spectrum is the pure point set `{0, -1/tau}` and the
    /// transcendental equation has no root.
    #[error("degenerate wave number k = 0 (spectrum is {{0, -1/tau}})")]
    Degenerate,

    /// A result does not fit in an `f64`.
    #[error("overflow: {0}")]
    Overflow(String),

    /// An iterative method did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// The requested computation is too ill-conditioned to be trusted.
    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    /// The requested size exceeds what the exact-arithmetic routine supports.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A configuration value failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Non-finite values appeared during a computation.
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    /// `true` for errors a caller can fix by changing the inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::NoDiscreteSpectrum { .. }
                | Error::Degenerate
                | Error::Config(_)
                | Error::Resource(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NoDiscreteSpectrum { .. } => "no_discrete_spectrum",
            Error::Degenerate => "degenerate",
            Error::Overflow(_) => "overflow",
            Error::Convergence { .. } => "convergence",
            Error::Conditioning(_) => "conditioning",
            Error::Resource(_) => "resource",
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn ensure_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be finite and > 0, got {tau}")))
    }
}
