//! Exact solver, certifier and analysis toolkit for bidding chess endgames.
//!
//! Positions carry no side to move. Each step of the game is auctioned, and
//! the quantity computed for a position is the Richman value: the critical
//! share of the total money that Black may hold while White can still force
//! the capture of the black king. Values are computed as the common limit of
//! dyadic lower and upper thresholds, recovered as exact rationals, and then
//! certified by a transient-set closure.

pub mod analytics;
pub mod board;
pub mod certify;
pub mod dyadic;
pub mod error;
pub mod json;
pub mod limit;
pub mod pieceset;
pub mod session;
pub mod solution;
pub mod space;
pub mod tablebase;

pub use board::{BoardDims, Color, Move, Piece, PieceKind, Position, Square, Status};
pub use error::{Error, Result};
pub use pieceset::PieceSet;
pub use solution::Solution;
pub use space::{PositionSpace, SpaceOptions};

/// Reduced arbitrary-precision fraction used for all exact values.
pub type Rational = num_rational::BigRational;
