use thiserror::Error;

use crate::trace::TraceError;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("write to dead block {0}")]
    DeadBlock(u64),

    #[error("block address {addr} out of range (memory has {blocks} blocks)")]
    AddressOutOfRange { addr: u64, blocks: u64 },

    #[error("payload is {got} bytes, expected {expected}")]
    PayloadLength { got: usize, expected: usize },

    #[error("trace cannot wear memory: it contains no writes")]
    NoWrites,

    #[error("codebook: {0}")]
    Codebook(String),

    #[error(transparent)]
    Trace(#[from] TraceError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
