use std::path::PathBuf;

use crate::policy::PolicyId;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("feedback schedule has {len} rounds but round {round} was requested")]
    ScheduleExhausted { round: usize, len: usize },

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("{what} supports at most {limit} but got {actual}")]
    SizeLimit {
        what: &'static str,
        limit: usize,
        actual: usize,
    },

    #[error("invalid Beta prior for arm {arm}: ({a}, {b})")]
    InvalidPrior { arm: usize, a: f64, b: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arm {0} appears more than once in one observation set")]
    DuplicateObservation(usize),

    #[error("outcome {value} for arm {arm} is not 0 or 1")]
    InvalidOutcome { arm: usize, value: u8 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no action carries information and every action has positive regret")]
    NoInformation,

    #[error("constraint level {level} exceeds the largest attainable value {max}")]
    Infeasible { level: f64, max: f64 },

    #[error("no regret bound is available for policy {0}")]
    NoBound(PolicyId),

    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial} (seed {seed:#018x}) failed: {source}")]
    TrialFailed {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: key `{key}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        key: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
