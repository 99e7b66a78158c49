//! Command implementations behind the `bdg-graph` binary.
//!
//! Every command takes a parsed [`config::Problem`] and returns an
//! [`Outcome`]: machine-readable output (CSV or JSON), human-readable notes
//! and an exit code. Exit codes are `0` on success, `1` on a domain failure
//! and `2` on a usage or parse error.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_eigenfunction, cmd_oracle, cmd_spectrum, cmd_transmit, cmd_validate, cmd_zero_mode,
    EigenRequest, OracleRequest, SpectrumRequest, TransmitRequest,
};
pub use config::{load, parse, Problem, ProblemConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl From<bdg_core::Error> for CliError {
    fn from(e: bdg_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    /// CSV / JSON / report text for stdout or the configured output path.
    pub machine: String,
    /// Notes for stderr.
    pub human: String,
    pub exit: i32,
}

impl Outcome {
    pub fn ok(machine: String) -> Self {
        Self { machine, human: String::new(), exit: 0 }
    }

    pub fn note(mut self, line: impl AsRef<str>) -> Self {
        self.human.push_str(line.as_ref());
        self.human.push('\n');
        self
    }
}
