//! Urn configuration files: `{"R": [[int, ...], ...], "alpha": [int, ...]}`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use urnlab_core::urn::{UrnSpec, ValidationReport};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "R")]
    r: Vec<Vec<i64>>,
    alpha: Vec<i64>,
}

#[derive(Debug)]
pub enum ConfigError {
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed JSON or a missing/mistyped field.
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed file whose matrix or composition is rejected outright.
    Structure {
        path: PathBuf,
        error: urnlab_core::Error,
    },
    /// Balanced urn failing tenability or irreducibility.
    Hypotheses {
        path: PathBuf,
        report: ValidationReport,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Read { path, source } => write!(f, "{}: {source}", path.display()),
            ConfigError::Parse { path, line, column, message } => {
                write!(f, "{}:{line}:{column}: {message}", path.display())
            }
            ConfigError::Structure { path, error } => write!(f, "{}: {error}", path.display()),
            ConfigError::Hypotheses { path, report } => {
                write!(f, "{}: invalid urn: {}", path.display(), report.summary())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses a configuration without checking tenability or irreducibility.
pub fn parse_spec(text: &str, path: &Path) -> Result<UrnSpec, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    UrnSpec::new(raw.r, raw.alpha).map_err(|error| ConfigError::Structure { path: path.to_path_buf(), error })
}

/// Reads and parses a configuration file.
pub fn read_spec(path: &Path) -> Result<UrnSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_spec(&text, path)
}

/// Reads a configuration and requires (B), (T) and (I).
pub fn load_valid_spec(path: &Path) -> Result<UrnSpec, ConfigError> {
    let spec = read_spec(path)?;
    let report = spec.report();
    if !report.is_valid() {
        return Err(ConfigError::Hypotheses { path: path.to_path_buf(), report });
    }
    Ok(spec)
}
