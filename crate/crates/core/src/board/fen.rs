//! Text encoding of positions: `<files>x<ranks>/<placement>`, where the
//! placement is the FEN board field generalised to the board size. There is
//! no side-to-move field. A plain 8-rank FEN placement (optionally followed
//! by the usual FEN fields, which are ignored) is read as an 8x8 position.

use super::{BoardDims, Piece, Position, Square};
use crate::error::{Error, Result};

impl Position {
    pub fn parse_fen(s: &str) -> Result<Position> {
        let s = s.trim();
        let (head, _) = s.split_once('/').ok_or_else(|| Error::Fen(format!("{s:?}: missing board size")))?;
        let (dims, placement) = if head.contains('x') {
            (head.parse::<BoardDims>()?, &s[head.len() + 1..])
        } else {
            (BoardDims::STANDARD, s.split_whitespace().next().unwrap_or(s))
        };
        let rows: Vec<&str> = placement.split('/').collect();
        if rows.len() != dims.ranks() as usize {
            return Err(Error::Fen(format!("{s:?}: expected {} ranks, found {}", dims.ranks(), rows.len())));
        }
        let mut pieces = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let rank = dims.ranks() - 1 - i as u8;
            let mut file: u32 = 0;
            let mut prev_digit = false;
            for c in row.chars() {
                if let Some(gap) = c.to_digit(10) {
                    if gap == 0 || prev_digit {
                        return Err(Error::Fen(format!("{s:?}: bad gap in rank {}", rank + 1)));
                    }
                    file += gap;
                    prev_digit = true;
                } else {
                    let piece = Piece::from_char(c).ok_or_else(|| Error::Fen(format!("{s:?}: unknown piece {c:?}")))?;
                    if file >= dims.files() as u32 {
                        return Err(Error::Fen(format!("{s:?}: rank {} overflows the board", rank + 1)));
                    }
                    pieces.push((Square { file: file as u8, rank }, piece));
                    file += 1;
                    prev_digit = false;
                }
                if file > dims.files() as u32 {
                    return Err(Error::Fen(format!("{s:?}: rank {} overflows the board", rank + 1)));
                }
            }
            if file != dims.files() as u32 {
                return Err(Error::Fen(format!("{s:?}: rank {} has {file} squares", rank + 1)));
            }
        }
        Position::new(dims, pieces)
    }

    pub fn to_fen(&self) -> String {
        let dims = self.dims;
        let mut out = dims.to_string();
        for rank in (0..dims.ranks()).rev() {
            out.push('/');
            let mut gap = 0;
            for file in 0..dims.files() {
                match self.piece_at(Square { file, rank }) {
                    Some(p) => {
                        if gap > 0 {
                            out.push(char::from_digit(gap, 10).unwrap());
                            gap = 0;
                        }
                        out.push(p.to_char());
                    }
                    None => gap += 1,
                }
            }
            if gap > 0 {
                out.push(char::from_digit(gap, 10).unwrap());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::Status;

    #[test]
    fn figure_one_round_trip() {
        let s = "8x8/3k3R/8/3K4/8/8/8/8/8";
        let p = Position::parse_fen(s).unwrap();
        let expect = Position::from_algebraic(BoardDims::STANDARD, &["Kd6", "Rh8"], &["Kd8"]).unwrap();
        assert_eq!(p, expect);
        assert_eq!(p.to_fen(), s);
    }

    #[test]
    fn plain_fen_reads_as_standard_board() {
        let p = Position::parse_fen("3k3R/8/3K4/8/8/8/8/8 w - - 0 1").unwrap();
        assert_eq!(p.to_fen(), "8x8/3k3R/8/3K4/8/8/8/8/8");
        assert!(Position::parse_fen("3k3R/8/3K4/8/8/8/8").is_err());
    }

    #[test]
    fn small_board_round_trip() {
        let s = "3x4/2k/3/3/K1N";
        let p = Position::parse_fen(s).unwrap();
        assert_eq!(p.dims(), BoardDims::new(3, 4).unwrap());
        assert_eq!(p.to_fen(), s);
    }

    #[test]
    fn terminal_encodes_without_missing_king() {
        let p = Position::parse_fen("8x8/3R4/8/3K4/8/8/8/8/8").unwrap();
        assert_eq!(p.status(), Status::WhiteWon);
        assert_eq!(p.to_fen(), "8x8/3R4/8/3K4/8/8/8/8/8");
    }

    #[test]
    fn malformed_strings() {
        for s in [
            "4x4/3k/8/4/K3",
            "4x4/3k/4/4",
            "8x8/3k3R/8/3K4/8/8/8/8",
            "8x8/3k3R/8/3K4/8/8/8/8/8/8",
            "8x8/3k3X/8/3K4/8/8/8/8/8",
            "8x8/3k3R/8/3K4/8/8/8/8/44",
            "8x8/3k3R/8/3K3K/8/8/8/8/8",
            "9x8/8/8/8/8/8/8/8/8",
            "8x8",
            "4x4/k3/4/4/K4",
            "4x4/k3/4/4/K0",
        ] {
            assert!(Position::parse_fen(s).is_err(), "{s} should be rejected");
        }
    }
}
