use super::{Color, Move, Piece, PieceKind, Placements, Position, Square};

const KING_STEPS: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
const KNIGHT_LEAPS: [(i32, i32); 8] = [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)];
const ROOK_DIRS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_DIRS: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

pub(super) fn generate(pos: &Position, color: Color, out: &mut Vec<(Move, Position)>) {
    for &(from, piece) in pos.pieces.iter() {
        if piece.color != color {
            continue;
        }
        match piece.kind {
            PieceKind::King => steps(pos, from, piece, &KING_STEPS, out),
            PieceKind::Knight => steps(pos, from, piece, &KNIGHT_LEAPS, out),
            PieceKind::Rook => slides(pos, from, piece, &ROOK_DIRS, out),
            PieceKind::Bishop => slides(pos, from, piece, &BISHOP_DIRS, out),
            PieceKind::Queen => {
                slides(pos, from, piece, &ROOK_DIRS, out);
                slides(pos, from, piece, &BISHOP_DIRS, out);
            }
            PieceKind::Pawn => pawn(pos, from, piece, out),
        }
    }
}

fn offset(pos: &Position, from: Square, (df, dr): (i32, i32)) -> Option<Square> {
    let (f, r) = (from.file as i32 + df, from.rank as i32 + dr);
    pos.dims.contains(f, r).then_some(Square { file: f as u8, rank: r as u8 })
}

fn steps(pos: &Position, from: Square, piece: Piece, deltas: &[(i32, i32)], out: &mut Vec<(Move, Position)>) {
    for &d in deltas {
        if let Some(to) = offset(pos, from, d) {
            match pos.piece_at(to) {
                Some(q) if q.color == piece.color => {}
                _ => push(pos, from, to, piece, None, out),
            }
        }
    }
}

fn slides(pos: &Position, from: Square, piece: Piece, dirs: &[(i32, i32)], out: &mut Vec<(Move, Position)>) {
    for &(df, dr) in dirs {
        let mut cur = from;
        while let Some(to) = offset(pos, cur, (df, dr)) {
            match pos.piece_at(to) {
                None => push(pos, from, to, piece, None, out),
                Some(q) => {
                    if q.color != piece.color {
                        push(pos, from, to, piece, None, out);
                    }
                    break;
                }
            }
            cur = to;
        }
    }
}

fn pawn(pos: &Position, from: Square, piece: Piece, out: &mut Vec<(Move, Position)>) {
    let ranks = pos.dims.ranks as i32;
    let (dir, start, last) = match piece.color {
        Color::White => (1, 1, ranks - 1),
        Color::Black => (-1, ranks - 2, 0),
    };
    let advance = |to: Square, out: &mut Vec<(Move, Position)>| {
        let captures_king = matches!(pos.piece_at(to), Some(q) if q.kind == PieceKind::King);
        if to.rank as i32 == last && !captures_king {
            for promo in [PieceKind::Queen, PieceKind::Knight] {
                push(pos, from, to, piece, Some(promo), out);
            }
        } else {
            push(pos, from, to, piece, None, out);
        }
    };
    if let Some(one) = offset(pos, from, (0, dir)) {
        if pos.piece_at(one).is_none() {
            advance(one, out);
            if from.rank as i32 == start && ranks >= 4 {
                if let Some(two) = offset(pos, from, (0, 2 * dir)) {
                    if pos.piece_at(two).is_none() {
                        advance(two, out);
                    }
                }
            }
        }
    }
    for df in [-1, 1] {
        if let Some(to) = offset(pos, from, (df, dir)) {
            if matches!(pos.piece_at(to), Some(q) if q.color != piece.color) {
                advance(to, out);
            }
        }
    }
}

fn push(pos: &Position, from: Square, to: Square, piece: Piece, promotion: Option<PieceKind>, out: &mut Vec<(Move, Position)>) {
    let dims = pos.dims;
    let last = match piece.color {
        Color::White => dims.ranks - 1,
        Color::Black => 0,
    };
    let kind = match (piece.kind, promotion) {
        (_, Some(k)) => k,
        // A pawn reaching the last rank by capturing the king: the game is
        // over, the pawn is shown as a queen so no pawn sits on that rank.
        (PieceKind::Pawn, None) if to.rank == last => PieceKind::Queen,
        (k, None) => k,
    };
    let mut placed: Placements = pos.pieces.iter().copied().filter(|&(s, _)| s != from && s != to).collect();
    let at = placed.iter().position(|(s, _)| s.index(dims) > to.index(dims)).unwrap_or(placed.len());
    placed.insert(at, (to, Piece::new(piece.color, kind)));
    out.push((
        Move { mover: piece.color, from, to, promotion },
        Position::from_sorted_unchecked(dims, placed),
    ));
}
