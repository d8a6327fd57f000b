use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] spin1_entangle::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 usage, 3 physics domain, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(spin1_entangle::Error::Io(_)) => 2,
            CliError::Core(e) if e.is_domain() => 3,
            CliError::Core(_) | CliError::Failed(_) => 4,
        }
    }
}
