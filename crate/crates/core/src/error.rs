use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input has rank zero")]
    ZeroRank,
    #[error("frame is not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),
    #[error("basis does not span the range of the matrix (residual {0:.3e})")]
    BasisMismatch(f64),
    #[error("principal angle {0} outside [0, pi/2]")]
    AngleRange(f64),
    #[error("principal angle of pi/2: geodesic is not unique")]
    RightAngle,
    #[error("invalid divergence specification: {0}")]
    InvalidSpec(String),
    #[error("outside divergence domain: {0}")]
    Domain(String),
    #[error("optimizer failed: {0}")]
    NonConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::NonConvergence(_) => 4,
            Error::Pair { source, .. } | Error::File { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
