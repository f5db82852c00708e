//! Error to exit-code mapping.

use std::fmt;

use synthpoll::adherence_eval::EvalError;
use synthpoll::embed_index::IndexError;
use synthpoll::llm_gateway::GatewayError;
use synthpoll::role_forge::RoleError;
use synthpoll::survey_runner::PollError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Bad arguments, unreadable or malformed input, unwritable output.
    Input = 2,
    /// Unparseable attribution, unmatched role and the like.
    Domain = 3,
    /// Backend could not be reached or failed the request.
    Backend = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Input,
            error: error.into(),
        }
    }

    pub fn domain(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Domain,
            error: error.into(),
        }
    }

    pub fn backend(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Backend,
            error: error.into(),
        }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }

    pub fn context(self, message: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            kind: self.kind,
            error: self.error.context(message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<GatewayError> for CliError {
    fn from(err: GatewayError) -> Self {
        match err {
            GatewayError::InvalidConfig(_) | GatewayError::InvalidRequest(_) => Self::input(err),
            _ => Self::backend(err),
        }
    }
}

impl From<RoleError> for CliError {
    fn from(err: RoleError) -> Self {
        match err {
            RoleError::Gateway(inner) => inner.into(),
            RoleError::EmptyText | RoleError::RoleFile { .. } | RoleError::Grid(_) => {
                Self::input(err)
            }
            RoleError::EmptyCells
            | RoleError::MixedLeaning { .. }
            | RoleError::DuplicateDimension(_)
            | RoleError::EmptyPerturbation => Self::input(err),
            RoleError::InvalidNarrative | RoleError::UnparseableAttribution(_) => Self::domain(err),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(err: IndexError) -> Self {
        Self::input(err)
    }
}

impl From<PollError> for CliError {
    fn from(err: PollError) -> Self {
        match err {
            PollError::BackendUnreachable { .. } => Self::backend(err),
            _ => Self::input(err),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::UnmatchedRole(_) | EvalError::MissingHumanAnswer { .. } => Self::domain(err),
            _ => Self::input(err),
        }
    }
}
