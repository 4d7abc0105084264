//! Versioning shared by every JSON document the crate reads and writes.

use thiserror::Error;

/// Value written into the `format_version` field of every document.
pub const FORMAT_VERSION: &str = "1";

const SUPPORTED_MAJOR: &str = "1";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unsupported format_version {found:?} (this build reads major version {SUPPORTED_MAJOR})")]
pub struct VersionError {
    pub found: String,
}

/// Accepts `"1"` and any `"1.x"` minor revision.
pub fn check_version(found: &str) -> Result<(), VersionError> {
    let major = found.split('.').next().unwrap_or_default();
    if major == SUPPORTED_MAJOR {
        Ok(())
    } else {
        Err(VersionError {
            found: found.to_string(),
        })
    }
}

/// Pretty JSON with a trailing newline, the layout of every shipped file.
pub(crate) fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document types always serialize");
    s.push('\n');
    s
}
