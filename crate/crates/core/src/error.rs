use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A state entry became NaN or infinite at time `t`.
    NonFinite { t: f64, context: &'static str },
    /// Pivot below the singularity threshold during a dense solve.
    Singular { pivot: f64 },
    /// Interpolation requested outside the grid.
    OutOfRange { t: f64, t0: f64, t1: f64 },
    DimensionMismatch { expected: usize, found: usize, what: &'static str },
    /// An operation needing `f(x) = Ax` was handed a nonlinear model.
    NotLinear,
    /// Training diverged; wraps the underlying failure with its location.
    Training { iteration: usize, sample: Option<usize>, source: alloc::boxed::Box<Error> },
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { t, context } => {
                write!(f, "non-finite value in {context} at t = {t}")
            }
            Error::Singular { pivot } => write!(f, "singular matrix (pivot magnitude {pivot:e})"),
            Error::OutOfRange { t, t0, t1 } => {
                write!(f, "time {t} outside grid range [{t0}, {t1}]")
            }
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::NotLinear => f.write_str("operation requires a linear model"),
            Error::Training { iteration, sample, source } => match sample {
                Some(j) => write!(f, "training failed at iteration {iteration}, sample {j}: {source}"),
                None => write!(f, "training failed at iteration {iteration}: {source}"),
            },
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    /// The innermost error, looking through [`Error::Training`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Training { source, .. } => source.root(),
            other => other,
        }
    }
}
