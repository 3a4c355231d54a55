//! Command implementations behind the `balance-nets` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod spec;

use balance_nets::{
    AlgebraError, DynamicsError, IoError, NetworkError, PotentialError, SemigroupError, SmoothError,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] balance_nets::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("spec: {0}")]
    Spec(String),
    #[error("{what} {value} exceeds bound {bound}")]
    Bound { what: &'static str, value: u128, bound: usize },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

via_core!(AlgebraError, NetworkError, PotentialError, DynamicsError, SemigroupError, SmoothError);

impl CliError {
    pub fn kind(&self) -> &'static str {
        use balance_nets::Error as E;
        match self {
            CliError::Io(IoError::Parse { .. }) => "parse",
            CliError::Io(IoError::Read { .. }) => "read",
            CliError::Io(_) => "validation",
            CliError::Core(E::Algebra(_)) => "algebra",
            CliError::Core(E::Network(_)) => "network",
            CliError::Core(E::Potential(_)) => "potential",
            CliError::Core(E::Dynamics(_)) => "dynamics",
            CliError::Core(E::Semigroup(_)) => "semigroup",
            CliError::Core(E::Smooth(_)) => "smooth",
            CliError::Core(E::Io(_)) => "input",
            CliError::Config(_) => "config",
            CliError::Spec(_) => "spec",
            CliError::Bound { .. } => "bound",
            CliError::Write { .. } => "write",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> ErrorJson {
        ErrorJson { error: ErrorBody { kind: self.kind(), message: self.to_string() } }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}

/// `{"error": {"kind": ..., "message": ...}}`
#[derive(Debug, Serialize)]
pub struct ErrorJson {
    pub error: ErrorBody,
}
