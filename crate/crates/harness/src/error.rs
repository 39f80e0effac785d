use std::path::PathBuf;

use thiserror::Error;

use crate::config::FieldError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {}", join(.0))]
    Validation(Vec<FieldError>),
    #[error(transparent)]
    Core(#[from] bilinear_ident::Error),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", .path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn join(errs: &[FieldError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
