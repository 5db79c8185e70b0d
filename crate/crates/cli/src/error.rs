use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{module}: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: rigidity_core::Error,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } | CliError::Io(_) => 3,
        }
    }
}

/// Attaches the module name to core errors.
pub trait Context<T> {
    fn during(self, module: &'static str) -> Result<T, CliError>;
    fn config(self) -> Result<T, CliError>;
}

impl<T> Context<T> for rigidity_core::Result<T> {
    fn during(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { module, source })
    }

    fn config(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(e.to_string()))
    }
}
