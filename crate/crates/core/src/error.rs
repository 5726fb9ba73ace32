use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transition matrix must be {n}x{n} with entries in {{0,1}}")]
    MalformedMatrix { n: usize },
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("{kind} {index} of the transition matrix is all zeros")]
    RowColumnEmpty { kind: &'static str, index: usize },
    #[error("transition matrix is not primitive (no positive power up to {bound})")]
    NotPrimitive { bound: usize },
    #[error("enumeration of {requested} items exceeds the cap of {cap}")]
    SizeGuard { requested: u128, cap: u128 },
    #[error("no admissible path of length {len} from symbol {from} to symbol {to}")]
    NoPath { from: usize, to: usize, len: usize },
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    InvalidSymbol { symbol: usize, alphabet: usize },
    #[error("word {0:?} is not admissible")]
    NotAdmissible(Vec<usize>),
    #[error("sequence of length {have} too short, need {need}")]
    TooShort { have: usize, need: usize },
    #[error("no value given for admissible word {0:?}")]
    MissingWord(Vec<usize>),
    #[error("functions live on different shift spaces")]
    DomainMismatch,
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("vector entry {index} is not strictly positive")]
    NonPositive { index: usize },
    #[error("{0}")]
    Undefined(&'static str),
    #[error("linear solve failed: {0}")]
    SolveFailure(&'static str),
    #[error("observable values are not commensurable on a lattice")]
    NotLattice,
    #[error("asymptotic variance is zero; normalised statistics undefined")]
    DegenerateVariance,
    #[error("target {target} outside attainable range ({lo}, {hi})")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("Green-Kubo ({green_kubo}) and resolvent ({resolvent}) variances disagree")]
    VarianceMismatch { green_kubo: f64, resolvent: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    /// True for failures of an iterative or linear-algebra step, as opposed
    /// to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::SolveFailure(_)
                | Error::VarianceMismatch { .. }
                | Error::DegenerateVariance
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
