use std::fmt;

use normbranch_core::{BranchError, FlowError, ParamError, PassError, ShootError};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Empty = 2,
    Failed = 3,
    Config = 4,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Exit::Config, message)
    }

    pub fn failed(message: impl Into<String>) -> Self {
        Self::new(Exit::Failed, message)
    }

    pub fn empty(message: impl Into<String>) -> Self {
        Self::new(Exit::Empty, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<ShootError> for CliError {
    fn from(e: ShootError) -> Self {
        let exit = match e {
            ShootError::NoBracket { .. } => Exit::Empty,
            ShootError::Param(_) => Exit::Config,
            _ => Exit::Failed,
        };
        Self::new(exit, e.to_string())
    }
}

impl From<BranchError> for CliError {
    fn from(e: BranchError) -> Self {
        match e {
            BranchError::EmptyBranch { .. } | BranchError::NoInteriorMax => Self::empty(e.to_string()),
            BranchError::Shoot(s) => s.into(),
            BranchError::Param(p) => p.into(),
            BranchError::TooFewPoints(_) => Self::failed(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Param(p) => p.into(),
            _ => Self::failed(e.to_string()),
        }
    }
}

impl From<PassError> for CliError {
    fn from(e: PassError) -> Self {
        match e {
            PassError::Param(p) => p.into(),
            PassError::Shoot(s) => s.into(),
            PassError::Flow(f) => f.into(),
            _ => Self::failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failed(format!("io: {e}"))
    }
}
