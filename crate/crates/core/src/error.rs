use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("number of spins must be positive")]
    EmptySystem,

    #[error("interaction order p = {p} is below the minimum {min}")]
    InvalidOrder { p: u32, min: u32 },

    #[error("{name} = {value} lies outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("{what} is undefined at (s, lambda) = ({s}, {lambda})")]
    Domain { what: &'static str, s: f64, lambda: f64 },

    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),

    #[error("seed component {0} lies outside [-1, 1]")]
    InvalidSeed(f64),

    #[error("no saddle-point candidate converged at (s, lambda) = ({s}, {lambda})")]
    NoConvergedCandidate { s: f64, lambda: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("eigensolver failed at s = {s}: {source}")]
    EigensolverAt {
        s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("scaling fit needs at least {needed} system sizes, got {got}")]
    TooFewSizes { needed: usize, got: usize },

    #[error("gap curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("time step rejected: unitarity error {error:e} at t = {time} persists after {halvings} halvings")]
    StepRejected { time: f64, error: f64, halvings: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of a numerical method on valid input, as opposed to
    /// rejected arguments.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Self::NoConvergedCandidate { .. }
                | Self::Eigensolver(_)
                | Self::EigensolverAt { .. }
                | Self::StepRejected { .. }
        )
    }
}
