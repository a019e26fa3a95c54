use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidGrid(&'static str),
    ShapeMismatch {
        expected: usize,
        found: usize,
    },
    NonFinite,
    /// Inverse transform left an imaginary part above tolerance.
    NotRealizable {
        residue: f64,
    },
    NegativeSymbol {
        component: usize,
        mode: usize,
        value: f64,
    },
    ComplexSymbol {
        component: usize,
    },
    InvalidKernel(&'static str),
    DegenerateFit {
        shells: usize,
    },
    NonContraction {
        iterations: usize,
        residual: f64,
    },
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
    },
    /// Field magnitude beyond the representable range of the nonlinearity.
    Overflow {
        magnitude: f64,
    },
    NonzeroMean {
        component: usize,
        magnitude: f64,
    },
    InsufficientTrace {
        samples: usize,
    },
    NonMonotoneTime {
        last: f64,
        next: f64,
    },
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected} values, found {found}")
            }
            Error::NonFinite => write!(f, "field contains non-finite values"),
            Error::NotRealizable { residue } => {
                write!(f, "spectrum is not realizable as a real field (imaginary residue {residue:e})")
            }
            Error::NegativeSymbol { component, mode, value } => write!(
                f,
                "negative squared frequency {value:e} at component {component}, mode {mode}"
            ),
            Error::ComplexSymbol { component } => write!(
                f,
                "operator symbol of component {component} is complex; only the admissibility audit accepts it"
            ),
            Error::InvalidKernel(why) => write!(f, "invalid kernel: {why}"),
            Error::DegenerateFit { shells } => {
                write!(f, "decay fit needs at least 3 distinct |xi| shells, found {shells}")
            }
            Error::NonContraction { iterations, residual } => write!(
                f,
                "Picard iteration is not contracting (residual {residual:e} after {iterations} iterations)"
            ),
            Error::MaxIterExceeded { iterations, residual } => write!(
                f,
                "Picard iteration did not converge in {iterations} iterations (residual {residual:e})"
            ),
            Error::Overflow { magnitude } => {
                write!(f, "field magnitude {magnitude:e} exceeds the nonlinearity range")
            }
            Error::NonzeroMean { component, magnitude } => write!(
                f,
                "component {component} has a nonzero mean mode (|u(0)| = {magnitude:e})"
            ),
            Error::InsufficientTrace { samples } => {
                write!(f, "blow-up trace has {samples} samples, at least 10 required")
            }
            Error::NonMonotoneTime { last, next } => {
                write!(f, "trace time must increase strictly ({next} after {last})")
            }
            Error::InvalidArgument(why) => write!(f, "invalid argument: {why}"),
        }
    }
}

impl core::error::Error for Error {}
