use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A least-squares slope could not be formed, or the slopes carry no
    /// spread for the empirical hyperparameters.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("chain diverged in {update} at iteration {iteration}")]
    ChainDivergence {
        update: &'static str,
        iteration: usize,
    },

    #[error("no posterior draws with a positive slope for unit {unit}")]
    EmptyPosterior { unit: usize },

    #[error("residual-life distribution is degenerate: all mass already lies before zero")]
    DegenerateDistribution,

    #[error("transformation chain never accepted a move")]
    StuckChain,

    #[error("no threshold crossing within {steps} steps")]
    NoCrossing { steps: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unit {unit}: {source}")]
    Unit {
        unit: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn for_unit(self, unit: impl Into<String>) -> Self {
        Error::Unit {
            unit: unit.into(),
            source: Box::new(self),
        }
    }
}
