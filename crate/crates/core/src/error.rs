use std::fmt;

use thiserror::Error;

use crate::graph::{MethodRef, PackageCoordinates};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `offset` is a byte offset into the source.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// Well-formed input that violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// Numeric argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    /// Converts a serde_json error into a parse error carrying a byte offset.
    pub(crate) fn from_json(err: serde_json::Error, source: &[u8]) -> Self {
        Error::Parse {
            offset: byte_offset(source, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

/// serde_json reports 1-based line and column; column counts bytes.
fn byte_offset(source: &[u8], line: usize, column: usize) -> usize {
    if line <= 1 {
        return column.saturating_sub(1).min(source.len());
    }
    let mut current = 1;
    for (i, b) in source.iter().enumerate() {
        if *b == b'\n' {
            current += 1;
            if current == line {
                return (i + column).min(source.len());
            }
        }
    }
    source.len()
}

/// Non-fatal diagnostics surfaced alongside a successful result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    DuplicateType {
        fqn: String,
        kept: PackageCoordinates,
        dropped: PackageCoordinates,
    },
    ExternalOwners {
        core: PackageCoordinates,
        owners: Vec<String>,
    },
    EmptyEntryPoints(PackageCoordinates),
    UnknownVulnerableFunction(MethodRef),
    DuplicateVersion(PackageCoordinates),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DuplicateType { fqn, kept, dropped } => write!(
                f,
                "type {fqn} defined in both {kept} and {dropped}; keeping the definition from {kept}"
            ),
            Warning::ExternalOwners { core, owners } => write!(
                f,
                "{} callee owner(s) outside the analyzed universe of {core} treated as external: {}",
                owners.len(),
                owners.join(", ")
            ),
            Warning::EmptyEntryPoints(pkg) => write!(f, "no entry points found in {pkg}"),
            Warning::UnknownVulnerableFunction(m) => {
                write!(f, "vulnerable function {m} not found in call graph")
            }
            Warning::DuplicateVersion(pkg) => {
                write!(f, "duplicate profile for {pkg}; keeping the first occurrence")
            }
        }
    }
}
