use std::path::PathBuf;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] ionsim_core::Error),
}

impl CliError {
    /// 2 for bad input, 3 for a truncation violation, 4 for an unreachable
    /// compile target, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use ionsim_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Input { .. } => 2,
            CliError::Core(E::Parse { .. } | E::NotRealizable(_) | E::NotHermitian { .. }) => 2,
            CliError::Core(E::Truncation { .. }) => 3,
            CliError::Core(E::Unreachable { .. }) => 4,
            _ => 1,
        }
    }
}
