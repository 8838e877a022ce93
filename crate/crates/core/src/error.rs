use thiserror::Error;

/// Errors raised by the link model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A series ran out of its term budget before meeting its tolerance.
    #[error("{op} did not converge within {max_terms} terms")]
    NotConverged { op: &'static str, max_terms: usize },

    /// The target throughput cannot be met inside the SNR search bracket.
    #[error("target {target} npcu unreachable: {achieved} npcu at {snr_db} dB")]
    Unreachable {
        target: f64,
        achieved: f64,
        snr_db: f64,
    },

    /// An element of a sweep failed; carries the offending speed.
    #[error("at {speed_kmh} km/h: {source}")]
    AtSpeed {
        speed_kmh: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        op,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(op: &'static str, name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn ensure_nonneg(op: &'static str, name: &str, x: f64) -> Result<()> {
    ensure_finite(op, name, x)?;
    if x >= 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be >= 0, got {x}")))
    }
}

pub(crate) fn ensure_positive(op: &'static str, name: &str, x: f64) -> Result<()> {
    ensure_finite(op, name, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be > 0, got {x}")))
    }
}
