use thiserror::Error;

use crate::instance::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("job {job} is listed in more than one product")]
    DuplicateJob { job: usize },

    #[error("job {job} does not belong to any product")]
    MissingJob { job: usize },

    #[error("invalid coding: {}", fmt_violations(.0))]
    InvalidCoding(Vec<Violation>),

    /// A job transition was fired while its input place `place` was empty.
    #[error("transition t_i{job} is disabled: place {place} is empty")]
    TransitionDisabled { job: usize, place: String },

    /// No remaining job can enter the buffer without leading to deadlock.
    #[error("no deadlock-free job order exists (stuck at position {position} of {jobs})")]
    Infeasible { position: usize, jobs: usize },

    #[error("reachability oracle limited to {cap} jobs, instance has {jobs}")]
    OracleCap { jobs: usize, cap: usize },

    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
