use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the dilation and inequality machinery.
///
/// Variants split into two families: input problems (malformed files,
/// inconsistent shapes, out-of-range indices) and mathematical failures
/// (a hypothesis that does not hold for the supplied data). The CLI maps
/// them onto exit codes 2 and 1 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("defect operator is not positive semidefinite (smallest eigenvalue {min_eig:.3e})")]
    NotSzegoPositive { min_eig: f64 },

    #[error("pairs do not define an isometry (Gram mismatch {mismatch:.3e})")]
    NotIsometric { mismatch: f64 },

    #[error("unitary completion requires {deficit} padding dimension(s)")]
    NeedsPadding { deficit: usize },

    #[error("I - zD is singular at z = {0}")]
    BoundarySingular(Complex64),

    #[error("tuple is not in the dilation class for (p, q) = ({p}, {q}): {reason}")]
    NotInClass { p: usize, q: usize, reason: String },

    #[error("reduced colligation is not unitary (deviation {0:.3e})")]
    Decomposition(f64),

    #[error("variety sample set is empty")]
    EmptyVariety,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input rather than by the mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Parse { .. } | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
