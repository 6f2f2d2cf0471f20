//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum EdlgpError {
    /// Invalid run configuration (bad key, bad value, inconsistent rates).
    #[error("configuration error: {0}")]
    Config(String),

    /// Dataset could not be loaded or fails its invariants.
    #[error("data error: {0}")]
    Data(String),

    /// Genotype text could not be parsed; `pos` is a 0-based character offset.
    #[error("parse error at character {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A primitive failed while executing a tree; `path` names the node.
    #[error("execution failure at node {path}: {msg}")]
    Exec { path: String, msg: String },

    /// A contract the library maintains internally was violated.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EdlgpError {
    /// Process exit code for the CLI: 2 config, 3 data, 4 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            EdlgpError::Config(_) => 2,
            EdlgpError::Data(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, EdlgpError>;
