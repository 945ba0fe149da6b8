//! Exit codes and error records shared by every subcommand.

use serde_json::json;
use std::process::ExitCode;

/// Result of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Exit 0.
    Success,
    /// Exit 2: a rejection, a failed property or a failed inequality.
    Negative,
    /// Exit 3: the time budget ran out before every check ran.
    Budget,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Negative => ExitCode::from(2),
            Outcome::Budget => ExitCode::from(3),
        }
    }
}

/// A failure before a result exists; exit 1 with a stable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn io(m: impl Into<String>) -> Self {
        CliError { code: "io", message: m.into() }
    }
    pub fn parse(m: impl Into<String>) -> Self {
        CliError { code: "parse", message: m.into() }
    }
    pub fn validation(m: impl Into<String>) -> Self {
        CliError { code: "validation", message: m.into() }
    }
    pub fn usage(m: impl Into<String>) -> Self {
        CliError { code: "usage", message: m.into() }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("{}", json!({"error": {"code": self.code, "message": self.message}}));
        ExitCode::from(1)
    }
}
