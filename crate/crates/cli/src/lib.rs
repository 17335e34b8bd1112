//! Scenario runner behind the `afc` binary: configuration files, pulse
//! sequence validation, end-to-end storage scenarios, and parameter sweeps.

pub mod config;
pub mod scenario;
pub mod sequence;
pub mod sweep;

pub use config::Config;
pub use scenario::{run_scenario, ScenarioOutput, ScenarioReport};
pub use sequence::{validate_sequence, Diagnostic, SequencePlan, Severity};
pub use sweep::sweep;

use std::fmt;

/// Failures surfaced by the command-line tools, carrying their exit code:
/// 2 for validation problems, 3 for fit non-convergence, 1 otherwise.
#[derive(Debug, Clone)]
pub enum CliError {
    Validation(String),
    FitDidNotConverge(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::FitDidNotConverge(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::FitDidNotConverge(msg) => write!(f, "fit did not converge: {msg}"),
            CliError::Other(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<afc_core::Error> for CliError {
    fn from(err: afc_core::Error) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Other(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::FitDidNotConverge("x".into()).exit_code(), 3);
        assert_eq!(CliError::Other("x".into()).exit_code(), 1);
    }
}
