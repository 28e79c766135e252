use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or mismatched basis/grid shapes.
    #[error("configuration: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain: {0}")]
    Domain(String),

    /// Iterative elliptic solve failed to reach the requested tolerance.
    #[error(
        "elliptic solver stalled: relative residual {residual:.3e} after {iterations} iterations"
    )]
    SolverStalled { residual: f64, iterations: usize },

    /// A solvability condition (zero-mean right-hand side) was violated by
    /// more than round-off, signalling constraint drift.
    #[error("solvability violated: {0}")]
    Solvability(String),

    /// Detected blow-up or a constraint excursion beyond the hard limit.
    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    /// A decay-rate fit was requested at a point where the asymptotic
    /// coefficient is below the detection threshold.
    #[error("rate undefined: {0}")]
    RateUndefined(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed snapshot/checkpoint data.
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
