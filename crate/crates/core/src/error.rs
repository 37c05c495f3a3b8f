use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mixing angle undefined at t = {t}: both STIRAP envelopes vanish")]
    DegenerateEnvelopes { t: f64 },
    #[error("adiabaticity metric undefined at t = {t}: a bright eigenfrequency coincides with the dark state")]
    DegenerateEigenvalues { t: f64 },
    #[error("two-photon detuning must be non-zero")]
    ZeroDetuning,
    #[error("perturbative shifts singular: delta02 = {delta02} lies within {guard} of a pole")]
    ShiftPole { delta02: f64, guard: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration failed at t = {t}: step size {step:e} underflowed")]
    StepUnderflow { t: f64, step: f64 },
    #[error("integration exceeded {max_steps} steps before reaching t = {t_end}")]
    TooManySteps { max_steps: usize, t_end: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("gate reconstruction unreliable: leakage to |1> is {leakage:.3e}")]
    Leakage { leakage: f64 },
    #[error("output error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
