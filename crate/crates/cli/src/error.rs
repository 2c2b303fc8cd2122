use crate::config::Issue;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", render_issues(.path, .issues))]
    Config { path: PathBuf, issues: Vec<Issue> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Solwave {
        context: String,
        #[source]
        source: solwave::SolwaveError,
    },
    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

fn render_issues(path: &std::path::Path, issues: &[Issue]) -> String {
    let mut s = format!("invalid configuration {} ({} problem(s)):", path.display(), issues.len());
    for i in issues {
        s.push_str(&format!("\n  {i}"));
    }
    s
}

/// Attaches `context` to a library error.
pub trait Context<T> {
    fn context(self, context: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for solwave::Result<T> {
    fn context(self, context: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Solwave {
            context: context.into(),
            source,
        })
    }
}
