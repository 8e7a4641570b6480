use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] layerscope_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: malformed header: {reason}", path.display())]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{}: payload has {actual} bytes but the header describes {expected}", path.display())]
    PayloadLength { path: PathBuf, expected: u64, actual: u64 },
    #[error("{}: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
    #[error("{}: {reason}", path.display())]
    Labels { path: PathBuf, reason: String },
    #[error("{}: {reason}", path.display())]
    Image { path: PathBuf, reason: String },
    #[error("{}: invalid JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown image id `{0}`")]
    UnknownImage(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("writing {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
