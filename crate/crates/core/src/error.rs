use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains non-finite values")]
    InvalidField,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("vorticity mean {mean:e} is not zero")]
    MeanNotZero { mean: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("mode ({jx}, {jy}) outside the resolved band")]
    ModeOutOfRange { jx: i64, jy: i64 },

    #[error("solution blew up at t = {t} (step {step})")]
    BlowUp { t: f64, step: u64 },

    #[error("q-update denominator {value:e} is not positive at step {step}")]
    DenominatorNonpositive { value: f64, step: u64 },

    #[error("velocity divergence {value:e} exceeds tolerance")]
    DivergenceViolation { value: f64 },

    #[error("horizon {t_end} is not an integer multiple of the time step {k}")]
    NonIntegralHorizon { t_end: f64, k: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("series is not uniformly sampled")]
    NonUniformSampling,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
