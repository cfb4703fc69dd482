//! Experiment harness behind the `anderson` binary.

pub mod commands;
pub mod config;
pub mod dist;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("not converged: {0}")]
    Unconverged(String),

    #[error(transparent)]
    Core(anderson_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Unconverged(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<anderson_core::Error> for CliError {
    fn from(e: anderson_core::Error) -> Self {
        use anderson_core::Error as E;
        match e {
            E::InvalidParameter { name, reason } => CliError::Validation {
                field: name.to_string(),
                reason,
            },
            E::InvalidDistribution(_) | E::Unnormalized { .. } | E::DensityRequired => CliError::Validation {
                field: "distribution".into(),
                reason: e.to_string(),
            },
            E::TailTooLarge { .. } => CliError::Validation {
                field: "lambda_max".into(),
                reason: e.to_string(),
            },
            E::EigenNoConvergence { .. } | E::QuadratureFailed { .. } => CliError::Unconverged(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
