use std::path::PathBuf;

use ghostfinger_core::script::Diagnostic;
use ghostfinger_core::{InstanceId, SceneError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("script rejected with {} diagnostic(s)", .0.len())]
    Diagnostics(Vec<Diagnostic>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("DegenerateRange: instance {id} has size 0 at t={t}")]
    Degenerate { id: InstanceId, t: f64 },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Diagnostics(_) => 1,
            _ => 2,
        }
    }
}
