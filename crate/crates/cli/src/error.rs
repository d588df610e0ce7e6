use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: qseg_core::Error,
    },

    #[error(transparent)]
    Core(#[from] qseg_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::File { source, .. } | CliError::Core(source) => core_code(source),
        }
    }
}

fn core_code(e: &qseg_core::Error) -> u8 {
    use qseg_core::Error::*;
    match e {
        Io(_) | Format(_) | Json(_) => EXIT_IO,
        DimensionMismatch(_) | InvalidArgument(_) | Invariant(_) => EXIT_INVARIANT,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches the file path to a library error.
pub trait AtPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> AtPath<T> for qseg_core::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|source| CliError::File { path: path.to_path_buf(), source })
    }
}
