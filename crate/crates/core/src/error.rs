use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: n={n}, a={a}, b={b} (need n >= 1 and a + b <= n)")]
    InvalidConfiguration { n: u64, a: u64, b: u64 },

    #[error("population {n} exceeds the supported maximum {max}")]
    PopulationTooLarge { n: u64, max: u64 },

    #[error("exact chain limited to n <= {cap}, got n = {n}")]
    ExactCapExceeded { n: u64, cap: u64 },

    #[error("pruned kernel requires an even population, got n = {0}")]
    OddPopulation(u64),

    #[error("configuration does not belong to a kernel with n = {expected} (got n = {got})")]
    PopulationMismatch { expected: u64, got: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition of {claim} violated: {reason}")]
    Precondition { claim: String, reason: String },

    #[error("no {d}-regular simple graph on {n} nodes: {reason}")]
    InfeasibleGraph { n: usize, d: usize, reason: String },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("reverse Chernoff bound outside its validity domain: {0}")]
    ReverseChernoffDomain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
