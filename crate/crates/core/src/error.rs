use alloc::string::String;
use core::fmt;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    Parameter(String),
    /// Input data is empty, degenerate or inconsistent.
    Input(String),
    /// A grid operation needs nodes the grid does not have.
    Grid(String),
    /// A requested radius or scale leaves the sampled region.
    Range(String),
    /// The dimension is not supported by this operation.
    UnsupportedDimension { n: usize, reason: &'static str },
    /// An iterative solver stopped before reaching its tolerance.
    NotConverged {
        iterations: usize,
        residual: f64,
        history: alloc::vec::Vec<f64>,
    },
    /// A structural prediction failed on a solved instance.
    TheoremViolation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "parameter error: {m}"),
            Error::Input(m) => write!(f, "input error: {m}"),
            Error::Grid(m) => write!(f, "grid error: {m}"),
            Error::Range(m) => write!(f, "range error: {m}"),
            Error::UnsupportedDimension { n, reason } => {
                write!(f, "unsupported dimension n = {n}: {reason}")
            }
            Error::NotConverged {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "solver did not converge after {iterations} iterations (last residual {residual:.3e})"
            ),
            Error::TheoremViolation(m) => write!(f, "theorem violation: {m}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
