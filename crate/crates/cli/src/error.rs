use std::fmt;

use gudie::export::ExportError;
use gudie::{ConfigError, ExpansionError, IngestError, PipelineError};

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Other = 1,
    Config = 2,
    Data = 3,
    Resource = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind,
            error: error.into(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(Kind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError {
            kind: self.kind,
            error: self.error.context(ctx),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !f.alternate() {
            return write!(f, "{}", self.error);
        }
        // error types that already embed their source are printed once
        let mut shown = String::new();
        for cause in self.error.chain() {
            let msg = cause.to_string();
            if shown.contains(&msg) {
                continue;
            }
            if !shown.is_empty() {
                shown.push_str(": ");
            }
            shown.push_str(&msg);
        }
        f.write_str(&shown)
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        let kind = match &err {
            PipelineError::Config(_) => Kind::Config,
            _ if err.is_resource() => Kind::Resource,
            _ => Kind::Data,
        };
        CliError::new(kind, err)
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::new(Kind::Config, err)
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        PipelineError::from(err).into()
    }
}

impl From<ExpansionError> for CliError {
    fn from(err: ExpansionError) -> Self {
        PipelineError::from(err).into()
    }
}

impl From<ExportError> for CliError {
    fn from(err: ExportError) -> Self {
        let kind = match err {
            ExportError::Io(_) => Kind::Other,
            _ => Kind::Data,
        };
        CliError::new(kind, err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::new(Kind::Other, err)
    }
}
