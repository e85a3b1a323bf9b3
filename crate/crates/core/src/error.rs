use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid board dimensions {files}x{ranks} (each side must be in 2..=8)")]
    InvalidDims { files: u32, ranks: u32 },

    #[error("square {0} is outside the board")]
    SquareOutOfRange(String),

    #[error("malformed position string: {0}")]
    Fen(String),

    #[error("invalid position: {0}")]
    InvalidPosition(String),

    #[error("invalid piece set {0:?}: {1}")]
    InvalidPieceSet(String, String),

    #[error("position is terminal; no move options")]
    TerminalPosition,

    #[error("illegal move {0}")]
    IllegalMove(String),

    #[error("position {0} is not part of this position space")]
    NotInSpace(String),

    #[error("position space is not closed under moves: {0} has an option outside the space")]
    NotClosed(String),

    #[error("empty interval: lower end {lo} exceeds upper end {hi}")]
    EmptyInterval { lo: String, hi: String },

    #[error("inconsistent inputs: {0}")]
    Mismatch(String),

    #[error("{0}")]
    Analysis(String),

    #[error("table format: {0}")]
    Format(String),

    #[error("integrity check failed: expected checksum {expected}, found {found}")]
    Integrity { expected: String, found: String },

    #[error("session: {0}")]
    Session(#[from] crate::session::SessionError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
