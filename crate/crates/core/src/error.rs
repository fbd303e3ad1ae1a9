use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Boxed error produced by a user-supplied operator.
pub type OperatorError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{} is not valid UTF-8 (first invalid byte at offset {offset})", path.display())]
    Decode { path: PathBuf, offset: u64 },

    /// An operator failed while an action was running.
    #[error("{}", operator_message(*partition, *record, source))]
    Operator {
        partition: usize,
        record: Option<usize>,
        #[source]
        source: OperatorError,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown column `{name}` (available: {})", available.join(", "))]
    UnknownColumn { name: String, available: Vec<String> },

    #[error("column `{column}` has type {found}, expected {expected}")]
    ColumnType {
        column: String,
        expected: String,
        found: String,
    },

    #[error("{}", encode_message(*ordinal, message))]
    Encode {
        ordinal: Option<usize>,
        message: String,
    },

    #[error("malformed binary row: {0}")]
    RowFormat(String),

    #[error("malformed JSON at byte {offset} ({path}): {message}")]
    Json {
        offset: u64,
        path: String,
        message: String,
    },

    #[error("lexicon entry #{ordinal} has an unexpected shape: {message}")]
    EntryShape { ordinal: u64, message: String },

    #[error("invalid name `{0}`: only [A-Za-z0-9_] allowed")]
    InvalidName(String),

    #[error("collection at {} is already complete", .0.display())]
    CollectionConflict(PathBuf),

    #[error("cannot finalize: part file {} is missing", .0.display())]
    MissingPart(PathBuf),

    #[error("document serialization failed: {0}")]
    Serialization(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn operator_message(partition: usize, record: Option<usize>, source: &OperatorError) -> String {
    match record {
        Some(r) => format!("operator failed in partition {partition} at record {r}: {source}"),
        None => format!("operator failed in partition {partition}: {source}"),
    }
}

fn encode_message(ordinal: Option<usize>, message: &str) -> String {
    match ordinal {
        Some(o) => format!("cannot encode object #{o}: {message}"),
        None => format!("cannot encode object: {message}"),
    }
}
