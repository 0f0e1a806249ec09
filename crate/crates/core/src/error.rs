use thiserror::Error;

use crate::transport::TransportError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported key size {0} (allowed: 512, 1024, 2048)")]
    KeySize(u32),

    #[error("plaintext is not in [0, N)")]
    PlaintextOutOfRange,

    #[error("invalid ciphertext: not a unit modulo N^2")]
    InvalidCiphertext,

    #[error("malformed encoding: {0}")]
    Decode(String),

    #[error(transparent)]
    Transport(#[from] TransportError),

    /// The peer answered with an ERROR message.
    #[error("remote error {code}: {text}")]
    Remote { code: u32, text: String },

    /// A message arrived that the protocol step did not expect.
    #[error("unexpected message: expected {expected}, got {got}")]
    UnexpectedMessage { expected: &'static str, got: String },

    /// Internal consistency check failed during a protocol run.
    #[error("protocol fault: {0}")]
    ProtocolFault(String),

    /// Caller violated a local precondition (dimension mismatch, k out of range...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dataset error at row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("schema error on line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
