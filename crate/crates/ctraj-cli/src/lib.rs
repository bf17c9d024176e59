//! Library side of the trajectory CLI: file formats and the error type
//! with the exit-code contract (1 = validation, 2 = numerical).

// negated float comparisons reject NaN where `<=` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;

use ctraj::error::Error as CoreError;

/// CLI failure with the exit code contract: 1 = validation, 2 = numerical.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let exit = match e {
            CoreError::LogBranchAmbiguity { .. }
            | CoreError::SingularNormalEquations { .. }
            | CoreError::CorrectnessGate { .. } => 2,
            _ => 1,
        };
        CliError {
            message: e.to_string(),
            exit,
        }
    }
}
