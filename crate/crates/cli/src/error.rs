use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] beaconmesh::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Touchstone {
        path: PathBuf,
        source: beaconmesh::Error,
    },
    #[error("{0}")]
    Scenario(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Output(#[from] io::Error),
    /// Flag combinations clap cannot express.
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
