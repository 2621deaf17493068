use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A config or input problem located by file, line and field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { file: None, line: None, field: field.into(), message: message.into() }
    }

    pub fn in_file(mut self, file: impl Into<PathBuf>) -> Self {
        self.file.get_or_insert(file.into());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}:", file.display())?;
            if let Some(line) = self.line {
                write!(f, "{line}:")?;
            }
            write!(f, " ")?;
        }
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(Diagnostic),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("certification failed for {field}: {source}")]
    Certification { field: &'static str, source: dispersia_core::Error },

    #[error("unsupported kernel for {field}: {reason}")]
    Unsupported { field: &'static str, reason: String },

    #[error(transparent)]
    Core(#[from] dispersia_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Certification { .. } => 2,
            CliError::Unsupported { .. } => 4,
            CliError::Core(e) => match e {
                dispersia_core::Error::CertificationFailed { .. } | dispersia_core::Error::NotInClassK(_) => 2,
                dispersia_core::Error::UnsupportedKernel => 4,
                _ => 1,
            },
        }
    }
}

impl From<Diagnostic> for CliError {
    fn from(d: Diagnostic) -> Self {
        CliError::Config(d)
    }
}
