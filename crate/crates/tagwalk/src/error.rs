use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// A structured file that does not match its schema.
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: tagwalk_core::Error,
    },
    #[error(transparent)]
    Core(#[from] tagwalk_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 1 I/O, 2 configuration, 3 statistics, 4 integrity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Schema { .. } => 2,
            Error::File { source, .. } | Error::Core(source) => core_exit_code(source),
        }
    }
}

fn core_exit_code(e: &tagwalk_core::Error) -> i32 {
    use tagwalk_core::Error as E;
    match e {
        E::Config { .. } | E::Domain(_) => 2,
        E::InsufficientStatistics { .. } | E::NoBaseline { .. } | E::Unlocked { .. } | E::Degenerate(_) | E::UndefinedRate => 3,
        E::Format(_) | E::Integrity { .. } => 4,
    }
}
