//! Material descriptions such as `KRk` and their closure under captures and
//! promotions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::board::{Color, Piece, PieceKind};
use crate::error::{Error, Result};

/// Ordered multiset of pieces with exactly one king of each colour.
///
/// The canonical order is White before Black, and within a colour
/// K, Q, R, B, N, P. The identifier writes White in upper case and Black in
/// lower case, e.g. `KPk` or `Kkn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PieceSet {
    pieces: SmallVec<[Piece; 4]>,
}

impl PieceSet {
    pub fn new(pieces: impl IntoIterator<Item = Piece>) -> Result<PieceSet> {
        let mut pieces: SmallVec<[Piece; 4]> = pieces.into_iter().collect();
        pieces.sort();
        let id: String = pieces.iter().map(|p| p.to_char()).collect();
        for color in [Color::White, Color::Black] {
            let kings = pieces.iter().filter(|p| p.color == color && p.kind == PieceKind::King).count();
            if kings != 1 {
                return Err(Error::InvalidPieceSet(id, format!("needs exactly one {color} king")));
            }
        }
        Ok(PieceSet { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self) -> String {
        self.pieces.iter().map(|p| p.to_char()).collect()
    }

    pub fn has_pawns(&self) -> bool {
        self.pieces.iter().any(|p| p.kind == PieceKind::Pawn)
    }

    /// Whether some non-king piece belongs to Black.
    pub fn has_black_extras(&self) -> bool {
        self.pieces.iter().any(|p| p.color == Color::Black && p.kind != PieceKind::King)
    }

    pub fn color_flip(&self) -> PieceSet {
        PieceSet::new(self.pieces.iter().map(|p| Piece::new(p.color.opponent(), p.kind))).expect("flip keeps kings")
    }

    /// Every piece set reachable by captures of non-king pieces and by pawn
    /// promotion to queen or knight, including `self`.
    pub fn closure(&self) -> BTreeSet<PieceSet> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(ps) = stack.pop() {
            if !seen.insert(ps.clone()) {
                continue;
            }
            for (i, p) in ps.pieces.iter().enumerate() {
                if p.kind == PieceKind::King {
                    continue;
                }
                let mut without = ps.pieces.clone();
                without.remove(i);
                stack.push(PieceSet::new(without.iter().copied()).unwrap());
                if p.kind == PieceKind::Pawn {
                    for promo in [PieceKind::Queen, PieceKind::Knight] {
                        let mut promoted = ps.pieces.clone();
                        promoted[i] = Piece::new(p.color, promo);
                        stack.push(PieceSet::new(promoted.iter().copied()).unwrap());
                    }
                }
            }
        }
        seen
    }
}

/// Union of closures, as a set ordered by identifier string.
pub fn closure_of_all<'a>(sets: impl IntoIterator<Item = &'a PieceSet>) -> BTreeSet<PieceSet> {
    sets.into_iter().flat_map(|s| s.closure()).collect()
}

/// All piece sets with two kings and at most one extra white piece.
pub fn all_three_piece_sets() -> Vec<PieceSet> {
    ["Kk", "KQk", "KRk", "KBk", "KNk", "KPk"].iter().map(|s| s.parse().unwrap()).collect()
}

impl Ord for PieceSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id().cmp(&other.id())
    }
}

impl PartialOrd for PieceSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PieceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for PieceSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pieces = s
            .chars()
            .map(|c| Piece::from_char(c).ok_or_else(|| Error::InvalidPieceSet(s.to_string(), format!("unknown piece {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        PieceSet::new(pieces).map_err(|e| match e {
            Error::InvalidPieceSet(_, why) => Error::InvalidPieceSet(s.to_string(), why),
            e => e,
        })
    }
}

impl TryFrom<String> for PieceSet {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PieceSet> for String {
    fn from(p: PieceSet) -> String {
        p.id()
    }
}
