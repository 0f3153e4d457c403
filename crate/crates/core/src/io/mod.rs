//! Persistence: dataset / trace CSV, the flat hyperparameter record, the
//! versioned JSON model document and the sectioned `key = value` run
//! configuration format.
//!
//! All readers parse untrusted text and report errors with line numbers;
//! each format has a string-level entry point so it can be fuzzed without
//! touching the filesystem.

pub mod config;
pub mod dataset_csv;
pub mod hp_record;
pub mod model;
pub mod report;

use thiserror::Error;

/// Parse failure in any of the text formats.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ParseError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            message: message.into(),
        }
    }

    pub fn structure(message: impl Into<String>) -> Self {
        ParseError::Structure(message.into())
    }
}
