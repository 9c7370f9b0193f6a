use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A binary or text input did not match its declared format. `offset` is
    /// the byte position at which reading failed.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("format error in {path}: {source}")]
    FormatIn {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A label row holds fewer entries than a requested top-k slice.
    #[error(
        "label row stores {have} entries but {need} are required; \
         regenerate the label file with a larger per-row top-k"
    )]
    LabelBudget { have: usize, need: usize },

    #[error("ground truth error: {0}")]
    GroundTruth(String),

    #[error("index has no split structure; run the split step first")]
    MissingSplit,

    #[error("index has no PQ block; rebuild the index with PQ enabled")]
    MissingPq,

    #[error("ADC tables were not prepared for partition {0}")]
    TablesNotPrepared(u32),
}

impl Error {
    pub fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::FormatIn {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
