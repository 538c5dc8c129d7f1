use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("player {player} violates constraint row {row} by {violation:.3e}")]
    Infeasible { player: usize, row: usize, violation: f64 },

    #[error("empty feasible set: {0}")]
    EmptySet(String),

    #[error("unbounded set: {0}")]
    Unbounded(String),

    #[error("projection did not converge after {iters} iterations (last gap {gap:.3e})")]
    ProjectionNotConverged { iters: usize, gap: f64 },

    #[error(
        "vertex enumeration supports dimension <= {cap}, got {dim}; \
         use box sets or a sampled bound instead"
    )]
    DimensionCap { dim: usize, cap: usize },

    #[error("operator returned a non-finite value at iteration {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("game has no partition provenance; build it with the aas builders")]
    MissingProvenance,

    #[error(
        "no interior witness: supply `interior_slack` and a `witness` profile on every \
         theta piece to certify the interiority constants"
    )]
    MissingWitness,

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("no active-set pattern satisfies the KKT conditions")]
    NoKktSolution,

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
