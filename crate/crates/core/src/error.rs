use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid resolution vector: {0}")]
    InvalidDelta(String),

    #[error("probability {name}={value} outside the admissible range {range}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("initial state {0:?} lies outside the operational state space")]
    InitialStateOutsideOss(Vec<f64>),

    #[error("initial state {0:?} lies in the failure region")]
    InitialStateInFailure(Vec<f64>),

    #[error("action sequence has length {actual}, horizon is {expected}")]
    ActionSequenceLength { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("candidate set intersects the failure region at centroid {0:?}")]
    CandidateInFailure(Vec<f64>),

    #[error("covering sets are defined over different spaces or resolutions")]
    MismatchedCover,

    #[error("set is not a subset of its reference set")]
    NotSubset,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("enumeration of {count} systems exceeds the configured cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("quantification of {label} did not converge within {runs} runs")]
    NotConverged { label: String, runs: u64 },

    #[error("malformed input: {0}")]
    Parse(String),
}
