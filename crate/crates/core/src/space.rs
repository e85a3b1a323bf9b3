//! Enumeration and indexing of closed position spaces, and the move graph
//! over them.
//!
//! Index order: ongoing positions grouped by piece set (ordered by identifier
//! string), each group in row-major order of the squares of its pieces taken
//! in piece-set order; then terminal positions, grouped by the material left
//! on the board (again ordered by identifier), in the same row-major order.
//! Only terminal positions that arise from a king capture are included.
//!
//! With [`SpaceOptions::symmetry`] enabled, each group keeps only the
//! representative of every symmetry class (the element with the smallest
//! row-major key). Pawnless material is reduced by the symmetries of the
//! board rectangle (the full dihedral group on square boards), material with
//! pawns by the left-right mirror only. Lookups canonicalise transparently.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::board::{BoardDims, Color, Piece, PieceKind, Placements, Position, Square, Status};
use crate::error::{Error, Result};
use crate::pieceset::PieceSet;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceOptions {
    /// Store one representative per board-symmetry class.
    pub symmetry: bool,
}

#[derive(Clone, Debug)]
struct Block {
    /// Identifier of the material in this block (`KRk`, or `KR` / `Rk` for
    /// terminal groups).
    id: String,
    pieces: SmallVec<[Piece; 4]>,
    status: Status,
    start: usize,
    keys: Vec<u32>,
    lookup: Vec<u32>,
    group: Vec<Vec<u8>>,
}

impl Block {
    fn new(dims: BoardDims, pieces: SmallVec<[Piece; 4]>, status: Status, symmetry: bool) -> Block {
        let id = pieces.iter().map(|p| p.to_char()).collect();
        let has_pawn = pieces.iter().any(|p| p.kind == PieceKind::Pawn);
        let group = if symmetry { symmetry_group(dims, has_pawn) } else { vec![identity(dims)] };
        let size = dims.num_squares().pow(pieces.len() as u32);
        Block { id, pieces, status, start: 0, keys: Vec::new(), lookup: vec![NONE; size], group }
    }

    fn key_of_squares(&self, squares: &[u8], dims: BoardDims) -> u32 {
        let s = dims.num_squares() as u32;
        squares.iter().fold(0u32, |acc, &q| acc * s + q as u32)
    }

    fn squares_of(&self, pos: &Position) -> Option<SmallVec<[u8; 4]>> {
        let dims = pos.dims();
        let mut out = SmallVec::new();
        for piece in &self.pieces {
            let sq = pos.pieces().iter().find(|(_, p)| p == piece)?.0;
            out.push(sq.index(dims) as u8);
        }
        Some(out)
    }

    fn canonical_key(&self, squares: &[u8], dims: BoardDims) -> u32 {
        let mut mapped: SmallVec<[u8; 4]> = SmallVec::from_slice(squares);
        let mut best = u32::MAX;
        for g in &self.group {
            for (m, &q) in mapped.iter_mut().zip(squares) {
                *m = g[q as usize];
            }
            best = best.min(self.key_of_squares(&mapped, dims));
        }
        best
    }

    fn decode(&self, key: u32, dims: BoardDims) -> Position {
        let s = dims.num_squares() as u32;
        let mut rest = key;
        let mut placed: Placements = SmallVec::new();
        for piece in self.pieces.iter().rev() {
            placed.push((dims.square_at((rest % s) as usize), *piece));
            rest /= s;
        }
        placed.sort_by_key(|(sq, _)| sq.index(dims));
        Position::from_sorted_unchecked(dims, placed)
    }
}

fn identity(dims: BoardDims) -> Vec<u8> {
    (0..dims.num_squares() as u8).collect()
}

fn symmetry_group(dims: BoardDims, has_pawn: bool) -> Vec<Vec<u8>> {
    let (f, r) = (dims.files(), dims.ranks());
    let map = |mirror_file: bool, mirror_rank: bool, transpose: bool| -> Vec<u8> {
        dims.squares()
            .map(|sq| {
                let mut file = if mirror_file { f - 1 - sq.file } else { sq.file };
                let mut rank = if mirror_rank { r - 1 - sq.rank } else { sq.rank };
                if transpose {
                    std::mem::swap(&mut file, &mut rank);
                }
                Square { file, rank }.index(dims) as u8
            })
            .collect()
    };
    let mut group = vec![identity(dims), map(true, false, false)];
    if !has_pawn {
        group.push(map(false, true, false));
        group.push(map(true, true, false));
        if f == r {
            for mf in [false, true] {
                for mr in [false, true] {
                    group.push(map(mf, mr, true));
                }
            }
        }
    }
    group
}

fn sorted_material(pos: &Position) -> SmallVec<[Piece; 4]> {
    let mut v: SmallVec<[Piece; 4]> = pos.pieces().iter().map(|&(_, p)| p).collect();
    v.sort();
    v
}

/// An indexed, enumerated set of positions on one board.
#[derive(Clone, Debug)]
pub struct PositionSpace {
    dims: BoardDims,
    options: SpaceOptions,
    sets: Vec<PieceSet>,
    blocks: Vec<Block>,
    ongoing_len: usize,
    len: usize,
}

impl PositionSpace {
    /// Enumerates the given piece sets (not closed automatically) together
    /// with the terminal positions their king captures produce.
    pub fn build(dims: BoardDims, sets: &[PieceSet], options: SpaceOptions) -> Result<PositionSpace> {
        let sets: BTreeSet<PieceSet> = sets.iter().cloned().collect();
        let mut blocks = Vec::new();
        let mut next = 0usize;
        for set in &sets {
            if set.len() > 3 {
                return Err(Error::InvalidPieceSet(set.id(), "more than three pieces".into()));
            }
            let mut block = Block::new(dims, set.pieces().into(), Status::Ongoing, options.symmetry);
            block.start = next;
            enumerate_block(&mut block, dims);
            next += block.keys.len();
            blocks.push(block);
        }
        let ongoing_len = next;
        let mut space = PositionSpace { dims, options, sets: sets.into_iter().collect(), blocks, ongoing_len, len: next };
        space.add_terminals()?;
        Ok(space)
    }

    /// Enumerates the closure of `roots` under captures and promotions.
    pub fn for_closure(dims: BoardDims, roots: &[PieceSet], options: SpaceOptions) -> Result<PositionSpace> {
        let sets: Vec<PieceSet> = crate::pieceset::closure_of_all(roots).into_iter().collect();
        PositionSpace::build(dims, &sets, options)
    }

    fn add_terminals(&mut self) -> Result<()> {
        let dims = self.dims;
        let mut found: Vec<(Block, Vec<u32>)> = Vec::new();
        for i in 0..self.ongoing_len {
            let pos = self.position(i);
            for color in [Color::White, Color::Black] {
                for (_, succ) in pos.options(color)? {
                    let status = succ.status();
                    if !status.is_terminal() {
                        continue;
                    }
                    let material = sorted_material(&succ);
                    let k = match found.iter().position(|(b, _)| b.pieces == material) {
                        Some(k) => k,
                        None => {
                            found.push((Block::new(dims, material, status, self.options.symmetry), Vec::new()));
                            found.len() - 1
                        }
                    };
                    let (block, keys) = &mut found[k];
                    let squares = block.squares_of(&succ).expect("material matches");
                    keys.push(block.canonical_key(&squares, dims));
                }
            }
        }
        found.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        let mut next = self.ongoing_len;
        for (mut block, mut keys) in found {
            keys.sort_unstable();
            keys.dedup();
            block.start = next;
            for (j, &k) in keys.iter().enumerate() {
                block.lookup[k as usize] = (next + j) as u32;
            }
            next += keys.len();
            block.keys = keys;
            self.blocks.push(block);
        }
        self.len = next;
        Ok(())
    }

    #[inline]
    pub fn dims(&self) -> BoardDims {
        self.dims
    }

    pub fn options(&self) -> SpaceOptions {
        self.options
    }

    /// Piece sets of the ongoing groups, ordered by identifier.
    pub fn piece_sets(&self) -> &[PieceSet] {
        &self.sets
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Ongoing positions occupy indices `0..ongoing_len()`.
    #[inline]
    pub fn ongoing_len(&self) -> usize {
        self.ongoing_len
    }

    fn block_of(&self, index: usize) -> &Block {
        let b = self.blocks.partition_point(|b| b.start <= index) - 1;
        &self.blocks[b]
    }

    pub fn position(&self, index: usize) -> Position {
        assert!(index < self.len, "index {index} out of range");
        let block = self.block_of(index);
        block.decode(block.keys[index - block.start], self.dims)
    }

    pub fn status(&self, index: usize) -> Status {
        if index < self.ongoing_len {
            Status::Ongoing
        } else {
            self.block_of(index).status
        }
    }

    /// Identifier of the material group holding `index`.
    pub fn group_id(&self, index: usize) -> &str {
        &self.block_of(index).id
    }

    /// Index range of the ongoing positions of one piece set.
    pub fn set_range(&self, set: &PieceSet) -> Option<std::ops::Range<usize>> {
        let id = set.id();
        self.blocks[..self.sets.len()]
            .iter()
            .find(|b| b.id == id)
            .map(|b| b.start..b.start + b.keys.len())
    }

    /// Index of a position (after canonicalisation), if it belongs here.
    pub fn index_of(&self, pos: &Position) -> Option<usize> {
        if pos.dims() != self.dims {
            return None;
        }
        let material = sorted_material(pos);
        let block = self.blocks.iter().find(|b| b.pieces == material)?;
        let squares = block.squares_of(pos)?;
        let key = block.canonical_key(&squares, self.dims);
        match block.lookup[key as usize] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn require_index(&self, pos: &Position) -> Result<usize> {
        self.index_of(pos).ok_or_else(|| Error::NotInSpace(pos.to_fen()))
    }

    /// All positions represented by `index` (a single position unless
    /// symmetry reduction is on).
    pub fn orbit(&self, index: usize) -> Vec<Position> {
        let block = self.block_of(index);
        let squares = decode_squares(block.keys[index - block.start], block.pieces.len(), self.dims);
        let mut out: Vec<Position> = Vec::with_capacity(block.group.len());
        for g in &block.group {
            let mapped: SmallVec<[u8; 4]> = squares.iter().map(|&q| g[q as usize]).collect();
            let pos = block.decode(block.key_of_squares(&mapped, self.dims), self.dims);
            if !out.contains(&pos) {
                out.push(pos);
            }
        }
        out
    }

    /// Number of positions represented by `index`.
    pub fn orbit_size(&self, index: usize) -> usize {
        if self.options.symmetry {
            self.orbit(index).len()
        } else {
            1
        }
    }

    /// Builds the move graph. Fails if some option leaves the space.
    pub fn graph(&self) -> Result<GameGraph> {
        let per_position: Vec<Result<(Vec<u32>, Vec<u32>)>> = (0..self.ongoing_len)
            .into_par_iter()
            .map(|i| {
                let pos = self.position(i);
                let mut sides = [Vec::new(), Vec::new()];
                for (side, color) in [Color::White, Color::Black].into_iter().enumerate() {
                    for (_, succ) in pos.options(color)? {
                        let j = self.index_of(&succ).ok_or_else(|| Error::NotClosed(pos.to_fen()))?;
                        sides[side].push(j as u32);
                    }
                    sides[side].sort_unstable();
                    sides[side].dedup();
                    assert!(!sides[side].is_empty(), "no {color} options in {pos}");
                }
                let [w, b] = sides;
                Ok((w, b))
            })
            .collect();
        let mut g = GameGraph {
            ongoing: self.ongoing_len,
            len: self.len,
            white_offsets: Vec::with_capacity(self.ongoing_len + 1),
            white_targets: Vec::new(),
            black_offsets: Vec::with_capacity(self.ongoing_len + 1),
            black_targets: Vec::new(),
            terminal_white_won: (self.ongoing_len..self.len).map(|i| self.status(i) == Status::WhiteWon).collect(),
        };
        g.white_offsets.push(0);
        g.black_offsets.push(0);
        for r in per_position {
            let (w, b) = r?;
            g.white_targets.extend_from_slice(&w);
            g.black_targets.extend_from_slice(&b);
            g.white_offsets.push(g.white_targets.len() as u32);
            g.black_offsets.push(g.black_targets.len() as u32);
        }
        Ok(g)
    }
}

fn decode_squares(key: u32, n: usize, dims: BoardDims) -> SmallVec<[u8; 4]> {
    let s = dims.num_squares() as u32;
    let mut out: SmallVec<[u8; 4]> = SmallVec::from_elem(0, n);
    let mut rest = key;
    for j in (0..n).rev() {
        out[j] = (rest % s) as u8;
        rest /= s;
    }
    out
}

fn enumerate_block(block: &mut Block, dims: BoardDims) {
    let n = block.pieces.len();
    let allowed: Vec<Vec<u8>> = block
        .pieces
        .iter()
        .map(|p| {
            dims.squares()
                .filter(|sq| p.kind != PieceKind::Pawn || (sq.rank >= 1 && sq.rank + 1 < dims.ranks()))
                .map(|sq| sq.index(dims) as u8)
                .collect()
        })
        .collect();
    let mut squares: SmallVec<[u8; 4]> = SmallVec::from_elem(0, n);
    let mut keys = Vec::new();
    fn rec(depth: usize, allowed: &[Vec<u8>], squares: &mut SmallVec<[u8; 4]>, block: &Block, dims: BoardDims, keys: &mut Vec<u32>) {
        if depth == allowed.len() {
            let key = block.key_of_squares(squares, dims);
            if block.group.len() == 1 || block.canonical_key(squares, dims) == key {
                keys.push(key);
            }
            return;
        }
        for &q in &allowed[depth] {
            if squares[..depth].contains(&q) {
                continue;
            }
            squares[depth] = q;
            rec(depth + 1, allowed, squares, block, dims, keys);
        }
    }
    rec(0, &allowed, &mut squares, block, dims, &mut keys);
    for (j, &k) in keys.iter().enumerate() {
        block.lookup[k as usize] = (block.start + j) as u32;
    }
    block.keys = keys;
}

/// Enumerates one piece set: its ongoing positions followed by the terminal
/// positions its king captures lead to.
pub fn enumerate_positions(set: &PieceSet, dims: BoardDims) -> Result<Vec<Position>> {
    let space = PositionSpace::build(dims, std::slice::from_ref(set), SpaceOptions::default())?;
    Ok((0..space.len()).map(|i| space.position(i)).collect())
}

/// Move graph over a [`PositionSpace`] in compressed sparse row form. Option
/// lists are deduplicated, which leaves every max and min unchanged.
#[derive(Clone, Debug)]
pub struct GameGraph {
    ongoing: usize,
    len: usize,
    white_offsets: Vec<u32>,
    white_targets: Vec<u32>,
    black_offsets: Vec<u32>,
    black_targets: Vec<u32>,
    terminal_white_won: Vec<bool>,
}

impl GameGraph {
    /// Builds a graph directly from option lists. Positions `0..white.len()`
    /// are ongoing; the remaining `terminals` are White wins when `true`.
    pub fn from_lists(white: Vec<Vec<u32>>, black: Vec<Vec<u32>>, terminals: Vec<bool>) -> Result<GameGraph> {
        if white.len() != black.len() {
            return Err(Error::Mismatch("option list lengths differ".into()));
        }
        let ongoing = white.len();
        let len = ongoing + terminals.len();
        let mut g = GameGraph {
            ongoing,
            len,
            white_offsets: vec![0],
            white_targets: Vec::new(),
            black_offsets: vec![0],
            black_targets: Vec::new(),
            terminal_white_won: terminals,
        };
        for (mut w, mut b) in white.into_iter().zip(black) {
            for list in [&mut w, &mut b] {
                list.sort_unstable();
                list.dedup();
                if list.is_empty() || list.iter().any(|&t| t as usize >= len) {
                    return Err(Error::Mismatch("empty or out-of-range option list".into()));
                }
            }
            g.white_targets.extend_from_slice(&w);
            g.black_targets.extend_from_slice(&b);
            g.white_offsets.push(g.white_targets.len() as u32);
            g.black_offsets.push(g.black_targets.len() as u32);
        }
        Ok(g)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn ongoing(&self) -> usize {
        self.ongoing
    }

    #[inline]
    pub fn white(&self, i: usize) -> &[u32] {
        &self.white_targets[self.white_offsets[i] as usize..self.white_offsets[i + 1] as usize]
    }

    #[inline]
    pub fn black(&self, i: usize) -> &[u32] {
        &self.black_targets[self.black_offsets[i] as usize..self.black_offsets[i + 1] as usize]
    }

    #[inline]
    pub fn options(&self, i: usize, color: Color) -> &[u32] {
        match color {
            Color::White => self.white(i),
            Color::Black => self.black(i),
        }
    }

    #[inline]
    pub fn status(&self, i: usize) -> Status {
        if i < self.ongoing {
            Status::Ongoing
        } else if self.terminal_white_won[i - self.ongoing] {
            Status::WhiteWon
        } else {
            Status::BlackWon
        }
    }

    pub fn edge_count(&self) -> usize {
        self.white_targets.len() + self.black_targets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> PieceSet {
        s.parse().unwrap()
    }

    #[test]
    fn counts_on_standard_board() {
        let d = BoardDims::STANDARD;
        let kk = PositionSpace::build(d, &[set("Kk")], SpaceOptions::default()).unwrap();
        assert_eq!(kk.ongoing_len(), 64 * 63);
        // terminals: a lone king of either colour on any square
        assert_eq!(kk.len() - kk.ongoing_len(), 128);
        let kr = PositionSpace::build(d, &[set("KRk")], SpaceOptions::default()).unwrap();
        assert_eq!(kr.ongoing_len(), 64 * 63 * 62);
    }

    #[test]
    fn pawn_count_matches_brute_force() {
        let d = BoardDims::STANDARD;
        let kp = PositionSpace::build(d, &[set("KPk")], SpaceOptions::default()).unwrap();
        let mut brute = 0;
        for k in 0..64 {
            for p in 0..64 {
                for b in 0..64 {
                    let pr = p / 8;
                    if k != p && k != b && p != b && (1..=6).contains(&pr) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(kp.ongoing_len(), brute);
        assert_eq!(brute, 48 * 63 * 62);
    }

    #[test]
    fn index_order_and_round_trip() {
        let d = BoardDims::new(4, 4).unwrap();
        let space = PositionSpace::for_closure(d, &[set("KPk")], SpaceOptions::default()).unwrap();
        let ids: Vec<&str> = space.piece_sets().iter().map(|_| "").collect();
        assert_eq!(ids.len(), 4);
        assert_eq!(space.group_id(0), "KNk");
        for i in 0..space.len() {
            let p = space.position(i);
            assert_eq!(space.index_of(&p), Some(i), "{p}");
        }
        // first KNk position: K on a1, N on b1, k on c1
        assert_eq!(space.position(0).to_fen(), "4x4/4/4/4/KNk1");
    }

    #[test]
    fn closure_is_closed() {
        let d = BoardDims::new(4, 4).unwrap();
        let space = PositionSpace::for_closure(d, &[set("KPk")], SpaceOptions::default()).unwrap();
        let g = space.graph().unwrap();
        assert_eq!(g.ongoing(), space.ongoing_len());
        let open = PositionSpace::build(d, &[set("KPk")], SpaceOptions::default()).unwrap();
        assert!(matches!(open.graph(), Err(Error::NotClosed(_))));
    }

    #[test]
    fn symmetric_space_covers_everything() {
        let d = BoardDims::new(5, 5).unwrap();
        for root in ["KNk", "KPk"] {
            let full = PositionSpace::for_closure(d, &[set(root)], SpaceOptions::default()).unwrap();
            let sym = PositionSpace::for_closure(d, &[set(root)], SpaceOptions { symmetry: true }).unwrap();
            assert!(sym.len() < full.len());
            let covered: usize = (0..sym.len()).map(|i| sym.orbit_size(i)).sum();
            assert_eq!(covered, full.len());
            for i in 0..full.len() {
                assert!(sym.index_of(&full.position(i)).is_some());
            }
        }
    }

    #[test]
    fn enumerate_requires_both_kings() {
        assert!("KR".parse::<PieceSet>().is_err());
        let ps = enumerate_positions(&set("Kk"), BoardDims::new(2, 2).unwrap()).unwrap();
        assert_eq!(ps.iter().filter(|p| p.status() == Status::Ongoing).count(), 12);
    }
}
