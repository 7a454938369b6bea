use thiserror::Error;

/// Errors produced by the codec, the container parser and the analysis tools.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported sample depth: maxval {0} (only 255 is supported)")]
    UnsupportedDepth(u32),

    #[error("bad magic at byte 0: expected \"GBS1\"")]
    BadMagic,

    #[error("unsupported container version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error("truncated container at byte {offset}: need {needed} more bytes for {what}")]
    Truncated { offset: usize, needed: usize, what: String },

    #[error("CRC mismatch in {record} record at byte {offset}")]
    Crc { record: RecordId, offset: usize },

    #[error("failed to decode {record}: {message}")]
    Decode { record: RecordId, message: String },

    #[error("index error: {0}")]
    Index(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies a record inside a stack, used in decode and CRC errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordId {
    /// 1-based layer index in extraction order.
    Layer(usize),
    Base,
    Trailer,
    /// A standalone payload not attached to a stack.
    Payload,
}

impl std::fmt::Display for RecordId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordId::Layer(i) => write!(f, "layer {i}"),
            RecordId::Base => f.write_str("base"),
            RecordId::Trailer => f.write_str("trailer"),
            RecordId::Payload => f.write_str("payload"),
        }
    }
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Re-attributes a payload-level decode failure to a specific record.
    pub(crate) fn in_record(self, record: RecordId) -> Self {
        match self {
            Error::Decode {
                record: RecordId::Payload,
                message,
            } => Error::Decode { record, message },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
