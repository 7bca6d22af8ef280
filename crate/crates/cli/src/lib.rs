//! Experiment runner behind the `safeset` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod testbed;

use std::process::ExitCode;

/// How a command finished when it did not error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A candidate set was falsified.
    Falsified,
    /// Two tallies differ.
    Differ,
    NotConverged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Falsified | Status::Differ => 2,
            Status::NotConverged => 3,
        }
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s.code())
    }
}

/// Exit code for an error: non-convergence keeps its own code.
pub fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<safeset_core::Error>() {
        Some(safeset_core::Error::NotConverged { .. }) => Status::NotConverged.code(),
        _ => 1,
    }
}
