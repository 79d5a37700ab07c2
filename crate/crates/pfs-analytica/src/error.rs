//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("quadrature did not converge within {subdivisions} subdivisions (error estimate {error_estimate:e})")]
    NonConvergence {
        subdivisions: usize,
        error_estimate: f64,
    },

    #[error("integrand returned a non-finite value at x = {x:e}")]
    NonFinite { x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mean SINR diverges: noise power must be strictly positive")]
    DivergentMean,

    #[error("scheduling probability underflow for terminal {terminal}: p = {prob:e}")]
    SchedProbUnderflow { terminal: usize, prob: f64 },

    #[error("empty resource-block subset")]
    EmptySubset,

    #[error("exact enumeration requested for {n} resource blocks; the limit is 16")]
    EnumerationTooLarge { n: usize },

    #[error("only {got} scheduled samples for terminal {terminal}, rb {rb}; need at least {need}")]
    InsufficientSamples {
        terminal: usize,
        rb: usize,
        got: usize,
        need: usize,
    },

    #[error("negative variance {0:e} from numerical cancellation")]
    NegativeVariance(f64),

    #[error("degenerate rate standard deviation for terminal {0}")]
    DegenerateStd(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("scenario digests differ: {a} vs {b}")]
    DigestMismatch { a: String, b: String },

    #[error("numerical failure at terminal {terminal}, rb {rb}: {source}")]
    At {
        terminal: usize,
        rb: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the (terminal, RB) the failure occurred at.
    pub fn at(self, terminal: usize, rb: usize) -> Self {
        Error::At {
            terminal,
            rb,
            source: Box::new(self),
        }
    }

    /// True for config/schema problems (CLI exit code 1); numerical
    /// failures map to exit code 2.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::DivergentMean | Error::Io(_) => true,
            Error::DigestMismatch { .. } => true,
            Error::At { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
