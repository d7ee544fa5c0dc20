use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("time {time} is not on the path grid")]
    OffGrid { time: f64 },

    #[error("time {time} lies beyond the horizon {horizon}")]
    BeyondHorizon { time: f64, horizon: f64 },

    #[error("estimator returned a non-finite value at replicate {replicate}")]
    NonFinite { replicate: u64 },

    #[error("chaos order {order} exceeds the supported maximum {limit}")]
    OrderTooLarge { order: usize, limit: usize },

    #[error("enumeration of {count} index tuples exceeds the limit {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("variance budget exceeded: {0}")]
    VarianceBudget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("non-finite value {value}")))
    }
}
