//! Board geometry, pieces, positions and move generation.
//!
//! Bidding chess has no check, checkmate or stalemate: the game ends when a
//! king is captured. A position therefore carries no side to move, and both
//! players have a list of move options in every ongoing position.

mod fen;
mod movegen;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::pieceset::PieceSet;

/// Board size. Both sides lie in `2..=8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BoardDims {
    files: u8,
    ranks: u8,
}

impl BoardDims {
    pub const STANDARD: BoardDims = BoardDims { files: 8, ranks: 8 };

    pub fn new(files: u32, ranks: u32) -> Result<Self> {
        if !(2..=8).contains(&files) || !(2..=8).contains(&ranks) {
            return Err(Error::InvalidDims { files, ranks });
        }
        Ok(BoardDims { files: files as u8, ranks: ranks as u8 })
    }

    #[inline]
    pub fn files(self) -> u8 {
        self.files
    }

    #[inline]
    pub fn ranks(self) -> u8 {
        self.ranks
    }

    #[inline]
    pub fn num_squares(self) -> usize {
        self.files as usize * self.ranks as usize
    }

    #[inline]
    pub fn contains(self, file: i32, rank: i32) -> bool {
        file >= 0 && rank >= 0 && file < self.files as i32 && rank < self.ranks as i32
    }

    pub fn square(self, file: u8, rank: u8) -> Result<Square> {
        if file < self.files && rank < self.ranks {
            Ok(Square { file, rank })
        } else {
            Err(Error::SquareOutOfRange(format!("({file},{rank}) on {self}")))
        }
    }

    /// Square from its row-major index (`rank * files + file`).
    #[inline]
    pub fn square_at(self, index: usize) -> Square {
        Square { file: (index % self.files as usize) as u8, rank: (index / self.files as usize) as u8 }
    }

    /// All squares in row-major order, rank 0 first.
    pub fn squares(self) -> impl Iterator<Item = Square> {
        (0..self.num_squares()).map(move |i| self.square_at(i))
    }

    /// Parses algebraic notation such as `d6`, checking it lies on this board.
    pub fn parse_square(self, s: &str) -> Result<Square> {
        let bad = || Error::SquareOutOfRange(s.to_string());
        let mut chars = s.chars();
        let f = chars.next().ok_or_else(bad)?;
        let rank: u8 = chars.as_str().parse().map_err(|_| bad())?;
        if !f.is_ascii_lowercase() || rank == 0 {
            return Err(bad());
        }
        let file = f as u8 - b'a';
        self.square(file, rank - 1).map_err(|_| bad())
    }
}

impl Default for BoardDims {
    fn default() -> Self {
        BoardDims::STANDARD
    }
}

impl fmt::Display for BoardDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.files, self.ranks)
    }
}

impl FromStr for BoardDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Fen(format!("bad board size {s:?}, expected FxR"));
        let (f, r) = s.split_once('x').ok_or_else(bad)?;
        BoardDims::new(f.parse().map_err(|_| bad())?, r.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for BoardDims {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BoardDims> for String {
    fn from(d: BoardDims) -> String {
        d.to_string()
    }
}

/// A square, 0-based. Rank 0 is White's first rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Square {
    pub file: u8,
    pub rank: u8,
}

impl Square {
    #[inline]
    pub fn index(self, dims: BoardDims) -> usize {
        self.rank as usize * dims.files as usize + self.file as usize
    }

    /// Colour of the square: `true` for light squares (a1 is dark).
    #[inline]
    pub fn is_light(self) -> bool {
        (self.file + self.rank) % 2 == 1
    }
}

/// Parses `d6`-style names on the largest board; use
/// [`BoardDims::parse_square`] to also check a board's bounds.
impl FromStr for Square {
    type Err = Error;
    fn from_str(s: &str) -> Result<Square> {
        BoardDims::STANDARD.parse_square(s)
    }
}

impl TryFrom<String> for Square {
    type Error = Error;
    fn try_from(s: String) -> Result<Square> {
        s.parse()
    }
}

impl From<Square> for String {
    fn from(s: Square) -> String {
        s.to_string()
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", (b'a' + self.file) as char, self.rank + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

impl Color {
    #[inline]
    pub fn opponent(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::White => "white",
            Color::Black => "black",
        })
    }
}

impl FromStr for Color {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "white" | "w" => Ok(Color::White),
            "black" | "b" => Ok(Color::Black),
            _ => Err(Error::Fen(format!("unknown colour {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    King,
    Queen,
    Rook,
    Bishop,
    Knight,
    Pawn,
}

impl PieceKind {
    pub fn letter(self) -> char {
        match self {
            PieceKind::King => 'K',
            PieceKind::Queen => 'Q',
            PieceKind::Rook => 'R',
            PieceKind::Bishop => 'B',
            PieceKind::Knight => 'N',
            PieceKind::Pawn => 'P',
        }
    }

    pub fn from_letter(c: char) -> Option<PieceKind> {
        Some(match c.to_ascii_uppercase() {
            'K' => PieceKind::King,
            'Q' => PieceKind::Queen,
            'R' => PieceKind::Rook,
            'B' => PieceKind::Bishop,
            'N' => PieceKind::Knight,
            'P' => PieceKind::Pawn,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    pub const fn new(color: Color, kind: PieceKind) -> Piece {
        Piece { color, kind }
    }

    /// FEN letter: upper case for White, lower case for Black.
    pub fn to_char(self) -> char {
        let c = self.kind.letter();
        match self.color {
            Color::White => c,
            Color::Black => c.to_ascii_lowercase(),
        }
    }

    pub fn from_char(c: char) -> Option<Piece> {
        let kind = PieceKind::from_letter(c)?;
        let color = if c.is_ascii_uppercase() { Color::White } else { Color::Black };
        Some(Piece { color, kind })
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Ongoing,
    WhiteWon,
    BlackWon,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Ongoing
    }
}

/// A single move by either player.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub mover: Color,
    pub from: Square,
    pub to: Square,
    /// Only `Queen` or `Knight`; rook and bishop promotions are dominated.
    pub promotion: Option<PieceKind>,
}

impl Move {
    /// Coordinate notation, e.g. `d1c3` or `d7d8n`.
    pub fn coord(&self) -> String {
        match self.promotion {
            Some(k) => format!("{}{}{}", self.from, self.to, k.letter().to_ascii_lowercase()),
            None => format!("{}{}", self.from, self.to),
        }
    }
}

impl Serialize for Move {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Move", 5)?;
        st.serialize_field("mover", &self.mover)?;
        st.serialize_field("from", &self.from)?;
        st.serialize_field("to", &self.to)?;
        st.serialize_field("promotion", &self.promotion)?;
        st.serialize_field("coord", &self.coord())?;
        st.end()
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.coord())
    }
}

pub(crate) type Placements = SmallVec<[(Square, Piece); 4]>;

/// Piece placement on a board. Pieces are kept sorted by square index so
/// that structural equality coincides with equality of placements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Position {
    dims: BoardDims,
    pieces: Placements,
}

impl Position {
    /// Builds a position, validating every placement invariant.
    pub fn new(dims: BoardDims, pieces: impl IntoIterator<Item = (Square, Piece)>) -> Result<Position> {
        let mut pieces: Placements = pieces.into_iter().collect();
        pieces.sort_by_key(|(sq, _)| sq.index(dims));
        for w in pieces.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidPosition(format!("two pieces on {}", w[0].0)));
            }
        }
        let mut kings = [0u8; 2];
        for &(sq, p) in &pieces {
            if sq.file >= dims.files || sq.rank >= dims.ranks {
                return Err(Error::SquareOutOfRange(format!("{sq} on {dims}")));
            }
            match p.kind {
                PieceKind::King => kings[p.color as usize] += 1,
                PieceKind::Pawn if sq.rank == 0 || sq.rank == dims.ranks - 1 => {
                    return Err(Error::InvalidPosition(format!("pawn on back or promotion rank at {sq}")));
                }
                _ => {}
            }
        }
        if kings[0] > 1 || kings[1] > 1 {
            return Err(Error::InvalidPosition("more than one king of a colour".into()));
        }
        if kings == [0, 0] {
            return Err(Error::InvalidPosition("no kings on the board".into()));
        }
        Ok(Position { dims, pieces })
    }

    /// Builds from a sorted placement list already known to be valid.
    pub(crate) fn from_sorted_unchecked(dims: BoardDims, pieces: Placements) -> Position {
        debug_assert!(pieces.windows(2).all(|w| w[0].0.index(dims) < w[1].0.index(dims)));
        Position { dims, pieces }
    }

    /// Convenience constructor from algebraic piece lists such as
    /// `&["Kd6", "Rh8"]` and `&["Kd8"]`.
    pub fn from_algebraic(dims: BoardDims, white: &[&str], black: &[&str]) -> Result<Position> {
        let mut pieces = Vec::new();
        for (color, list) in [(Color::White, white), (Color::Black, black)] {
            for s in list {
                let mut cs = s.chars();
                let first = cs.next().ok_or_else(|| Error::Fen(format!("empty piece spec in {list:?}")))?;
                let (kind, rest) = match PieceKind::from_letter(first) {
                    Some(k) if first.is_ascii_uppercase() => (k, cs.as_str()),
                    _ => (PieceKind::Pawn, *s),
                };
                pieces.push((dims.parse_square(rest)?, Piece::new(color, kind)));
            }
        }
        Position::new(dims, pieces)
    }

    #[inline]
    pub fn dims(&self) -> BoardDims {
        self.dims
    }

    #[inline]
    pub fn pieces(&self) -> &[(Square, Piece)] {
        &self.pieces
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.pieces.iter().find(|(s, _)| *s == sq).map(|&(_, p)| p)
    }

    pub fn king(&self, color: Color) -> Option<Square> {
        self.pieces
            .iter()
            .find(|(_, p)| p.kind == PieceKind::King && p.color == color)
            .map(|&(s, _)| s)
    }

    pub fn status(&self) -> Status {
        match (self.king(Color::White).is_some(), self.king(Color::Black).is_some()) {
            (true, true) => Status::Ongoing,
            (true, false) => Status::WhiteWon,
            _ => Status::BlackWon,
        }
    }

    /// The material on the board, or `None` for a terminal position.
    pub fn piece_set(&self) -> Option<PieceSet> {
        if self.status().is_terminal() {
            return None;
        }
        PieceSet::new(self.pieces.iter().map(|&(_, p)| p)).ok()
    }

    /// Move options of `color`, each with its resulting position.
    pub fn options(&self, color: Color) -> Result<Vec<(Move, Position)>> {
        if self.status().is_terminal() {
            return Err(Error::TerminalPosition);
        }
        let mut out = Vec::with_capacity(32);
        movegen::generate(self, color, &mut out);
        Ok(out)
    }

    pub fn white_options(&self) -> Result<Vec<(Move, Position)>> {
        self.options(Color::White)
    }

    pub fn black_options(&self) -> Result<Vec<(Move, Position)>> {
        self.options(Color::Black)
    }

    /// Plays `m`, which must be one of its mover's options.
    pub fn apply_move(&self, m: &Move) -> Result<Position> {
        self.options(m.mover)?
            .into_iter()
            .find(|(o, _)| o == m)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::IllegalMove(format!("{m} by {} in {}", m.mover, self)))
    }

    /// Finds a move of `color` by coordinates; `promotion` is only consulted
    /// when the move promotes.
    pub fn find_move(&self, color: Color, from: Square, to: Square, promotion: Option<PieceKind>) -> Result<(Move, Position)> {
        let opts = self.options(color)?;
        let mut matching = opts.into_iter().filter(|(m, _)| m.from == from && m.to == to).peekable();
        let first = matching.peek().cloned();
        match first {
            None => Err(Error::IllegalMove(format!("{from}{to} by {color} in {self}"))),
            Some((m, _)) if m.promotion.is_none() => Ok(first.unwrap()),
            Some(_) => {
                let want = promotion.ok_or_else(|| Error::IllegalMove(format!("{from}{to} needs a promotion piece")))?;
                matching
                    .find(|(m, _)| m.promotion == Some(want))
                    .ok_or_else(|| Error::IllegalMove(format!("promotion to {want:?} is not available")))
            }
        }
    }

    /// Swaps colours and mirrors ranks.
    pub fn color_flip(&self) -> Position {
        let ranks = self.dims.ranks;
        let pieces = self.pieces.iter().map(|&(sq, p)| {
            (Square { file: sq.file, rank: ranks - 1 - sq.rank }, Piece::new(p.color.opponent(), p.kind))
        });
        let mut v: Placements = pieces.collect();
        v.sort_by_key(|(sq, _)| sq.index(self.dims));
        Position { dims: self.dims, pieces: v }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fen())
    }
}

impl From<Position> for String {
    fn from(p: Position) -> String {
        p.to_fen()
    }
}

impl TryFrom<String> for Position {
    type Error = Error;
    fn try_from(s: String) -> Result<Position> {
        s.parse()
    }
}

impl FromStr for Position {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Position::parse_fen(s)
    }
}
