use serde::Serialize;

use retro_core::channel::ChannelError;
use retro_core::cme::CmeError;
use retro_core::crn::CrnError;
use retro_core::lna::LnaError;
use retro_core::retro::RetroError;
use retro_core::ssa::SsaError;
use retro_core::state_space::StateSpaceError;
use retro_core::validate::ValidateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Solver,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Solver => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Solver, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "exit_code": self.kind.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl From<CrnError> for CliError {
    fn from(e: CrnError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<CmeError> for CliError {
    fn from(e: CmeError) -> Self {
        match e {
            CmeError::Network(e) => e.into(),
            CmeError::StateSpace(e) => e.into(),
            other => CliError::solver(other.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::InvalidProbability(_)
            | ChannelError::NonpositiveNoise(_)
            | ChannelError::NegativeSignal(_) => CliError::config(e.to_string()),
            ChannelError::Network(e) => e.into(),
            ChannelError::Cme(e) => e.into(),
            other => CliError::solver(other.to_string()),
        }
    }
}

impl From<RetroError> for CliError {
    fn from(e: RetroError) -> Self {
        match e {
            RetroError::Channel(e) => e.into(),
            RetroError::InvalidQ { .. } | RetroError::TargetCount { .. } | RetroError::NotMimo(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::solver(other.to_string()),
        }
    }
}

impl From<LnaError> for CliError {
    fn from(e: LnaError) -> Self {
        match e {
            LnaError::InvalidParams(_) => CliError::config(e.to_string()),
            LnaError::Channel(e) => e.into(),
            other => CliError::solver(other.to_string()),
        }
    }
}

impl From<ValidateError> for CliError {
    fn from(e: ValidateError) -> Self {
        match e {
            ValidateError::Retro(e) => e.into(),
            ValidateError::Channel(e) => e.into(),
            ValidateError::Cme(e) => e.into(),
            ValidateError::Network(e) => e.into(),
            ValidateError::Ssa(e) => e.into(),
        }
    }
}

impl From<StateSpaceError> for CliError {
    fn from(e: StateSpaceError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SsaError> for CliError {
    fn from(e: SsaError) -> Self {
        match e {
            SsaError::LeftStateSpace(_) => CliError::solver(e.to_string()),
            SsaError::StateSpace(e) => e.into(),
            other => CliError::config(other.to_string()),
        }
    }
}
