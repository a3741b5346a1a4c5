use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration. `line` is 1-based when known.
    #[error("{origin}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        origin: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] gasplant_core::Error),

    /// A validation property did not hold.
    #[error("{0}")]
    Check(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use gasplant_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) => match e {
                E::Unstable { .. } | E::Cfl { .. } | E::NonFinite { .. } => 3,
                E::InvalidParameter { .. }
                | E::OutOfDomain { .. }
                | E::SnapshotOutOfRange { .. }
                | E::NotDegenerate(_)
                | E::PolicyMismatch(_) => 2,
            },
            CliError::Check(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
