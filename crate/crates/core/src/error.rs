use std::path::PathBuf;

use thiserror::Error;

use crate::assessment::AssessmentError;
use crate::catalog::CatalogError;
use crate::importance::ImportanceError;
use crate::io::InputError;
use crate::minimums::MinimumsError;
use crate::reporting::ReportingError;
use crate::staging::StagingError;

/// Exit status for malformed or invalid input files.
pub const EXIT_INPUT: i32 = 1;
/// Exit status for well-formed inputs that do not fit together.
pub const EXIT_SEMANTIC: i32 = 2;
/// Exit status for command-line usage errors (sysexits `EX_USAGE`).
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Catalog {
        context: String,
        #[source]
        source: CatalogError,
    },
    #[error("{context}: {source}")]
    Importance {
        context: String,
        #[source]
        source: ImportanceError,
    },
    #[error("{context}: {source}")]
    Staging {
        context: String,
        #[source]
        source: StagingError,
    },
    #[error("{context}: {source}")]
    Minimums {
        context: String,
        #[source]
        source: MinimumsError,
    },
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error(transparent)]
    Reporting(#[from] ReportingError),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Input(_) | Error::Io { .. } | Error::Catalog { .. } => EXIT_INPUT,
            Error::Importance { source, .. } => match source {
                ImportanceError::NoData(_) => EXIT_SEMANTIC,
                _ => EXIT_INPUT,
            },
            Error::Staging { source, .. } => match source {
                StagingError::MissingResponses(_)
                | StagingError::MismatchedCatalogs(_)
                | StagingError::CyclicDependencies => EXIT_SEMANTIC,
                _ => EXIT_INPUT,
            },
            Error::Minimums { source, .. } => match source {
                MinimumsError::MissingRatings(_) => EXIT_SEMANTIC,
                _ => EXIT_INPUT,
            },
            Error::Assessment(_) | Error::Reporting(_) => EXIT_SEMANTIC,
        }
    }
}
