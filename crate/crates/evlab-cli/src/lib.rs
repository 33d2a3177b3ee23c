//! Parsing, ingestion, execution, and reporting layer behind the `evlab`
//! binary. Everything except flag handling lives here so it can be tested
//! (and fuzzed) without spawning the binary.

pub mod config;
pub mod ingest;
pub mod report;
pub mod run;

use std::fmt;

use evlab::EvError;

/// CLI-level error carrying its process exit code: 2 for configuration
/// problems, 3 for data problems, 4 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<EvError> for CliError {
    fn from(e: EvError) -> Self {
        match &e {
            EvError::QuadratureNonConvergence { .. } | EvError::AdapterFailure { .. } => {
                CliError::Numeric(e.to_string())
            }
            EvError::DataOutOfRange { .. } | EvError::NonBinarySymbol { .. } => {
                CliError::Data(e.to_string())
            }
            EvError::Replication { source, .. } => {
                // classify by the underlying cause, keep the wrapped message
                match CliError::from(clone_kind(source)) {
                    CliError::Config(_) => CliError::Config(e.to_string()),
                    CliError::Data(_) => CliError::Data(e.to_string()),
                    CliError::Numeric(_) => CliError::Numeric(e.to_string()),
                }
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

// EvError is not Clone (boxed source); rebuild just enough for classification.
fn clone_kind(e: &EvError) -> EvError {
    match e {
        EvError::QuadratureNonConvergence { rel_tol } => {
            EvError::QuadratureNonConvergence { rel_tol: *rel_tol }
        }
        EvError::AdapterFailure { name, message } => {
            EvError::AdapterFailure { name: name.clone(), message: message.clone() }
        }
        EvError::DataOutOfRange { index, value } => {
            EvError::DataOutOfRange { index: *index, value: *value }
        }
        EvError::NonBinarySymbol { index, value } => {
            EvError::NonBinarySymbol { index: *index, value: *value }
        }
        EvError::Replication { rep, source } => {
            EvError::Replication { rep: *rep, source: Box::new(clone_kind(source)) }
        }
        other => EvError::InvalidArgument(other.to_string()),
    }
}
