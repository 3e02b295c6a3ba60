use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported interior order {0}; only 3 and 4 are available")]
    UnsupportedOrder(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("Λ decomposition residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    DecompositionFailure { residual: f64, tolerance: f64 },

    #[error("numerical blowup at step {step} (t = {time})")]
    NumericalBlowup { step: usize, time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} has length {got}, expected {expected}"
        )))
    }
}
