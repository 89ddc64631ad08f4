use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("symmetric eigensolver did not converge")]
    EigenNoConvergence,

    #[error("no community structure detected (estimated K = 0)")]
    NoCommunityStructure,

    #[error("label vectors differ in length ({estimated} vs {truth})")]
    LengthMismatch { estimated: usize, truth: usize },

    #[error("ambiguous eigenvalue matching: sample eigenvalue {value} is equidistant from population groups {first} and {second}")]
    AmbiguousMatching { value: f64, first: usize, second: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by bad user input, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::InvalidArgument(_)
                | Error::NotSymmetric(_)
                | Error::NonFinite
                | Error::LengthMismatch { .. }
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
