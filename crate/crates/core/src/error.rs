use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameter tuple violates `alpha > 0`, `h > g` or `0 < f0 < 1`.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Lerch argument hit a pole, i.e. the parameters lie on a degeneracy
    /// line and the nongeneric formulas must be used instead.
    #[error("degenerate argument: v + {index} = {value:e} is within 1e-12 of zero")]
    Degenerate { index: usize, value: f64 },

    #[error("constraint unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("no root in [{lo}, {hi}]: residual signs {sign_lo} / {sign_hi}")]
    NoRoot {
        lo: f64,
        hi: f64,
        sign_lo: f64,
        sign_hi: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
