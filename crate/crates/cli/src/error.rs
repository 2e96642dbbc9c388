use std::fmt;

/// Failure category; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Training,
    Evaluation,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Data => 3,
            Stage::Training => 4,
            Stage::Evaluation => 5,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "configuration error",
            Stage::Data => "data error",
            Stage::Training => "training error",
            Stage::Evaluation => "evaluation error",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        CliError {
            stage,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a failure category and context to library errors.
pub trait Context<T> {
    fn at(self, stage: Stage, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn at(self, stage: Stage, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::new(stage, format!("{what}: {e}")))
    }
}
