use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown dispersion unit `{0}` (expected `ps/nm` or `s/m`)")]
    UnknownUnit(String),

    #[error(
        "wavelength {lambda_m:e} m outside the dispersion table range [{min_m:e}, {max_m:e}] m"
    )]
    OutOfDomain {
        lambda_m: f64,
        min_m: f64,
        max_m: f64,
    },

    #[error("delay plan needs a max offset of {required} samples, budget is {budget}")]
    DelayBudget { required: u64, budget: u64 },

    #[error("repetition rate mismatch: {0}")]
    RateMismatch(String),

    #[error("plans are not comparable: {0}")]
    PlanMismatch(String),

    #[error("signal has {actual} samples, superposition needs at least {required}")]
    SignalTooShort { required: usize, actual: usize },

    #[error("carrier not found near {freq_hz} Hz (peak holds {fraction:e} of total power)")]
    CarrierNotFound { freq_hz: f64, fraction: f64 },

    #[error("noise profile is negative ({value:e} rad^2/Hz) at {freq_hz} Hz")]
    NegativeNoise { freq_hz: f64, value: f64 },

    #[error("empty integration band [{f_min}, {f_max}] Hz")]
    EmptyBand { f_min: f64, f_max: f64 },

    #[error("predicted memory {required} bytes exceeds budget {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("malformed CSV `{path}`: {message}")]
    Csv { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
