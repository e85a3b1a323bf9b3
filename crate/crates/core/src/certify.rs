//! Certification of a Richman function by transient sets.
//!
//! Given a Richman function `x`, the sets `T_0 ⊆ T_1 ⊆ ...` start from the
//! terminal positions; a position joins `T_{k+1}` when it has an x-greedy
//! White option into `T_k`, or when all its Black options lead into `T_k`.
//! The lower value equals `x` exactly when every position with `x > 0` ends
//! up in the closure `T`. The upper value is checked with `T'`, the same
//! construction seen from Black (greedy Black options minimise `x`), over
//! positions with `x < 1`. The two closures are computed independently.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{Color, PieceKind, Position, Status};
use crate::error::{Error, Result};
use crate::space::{GameGraph, PositionSpace};
use crate::Rational;

/// Dense ranks of exact values: equal values share a rank and the rank
/// order is the value order. All comparisons in this module go through it.
#[derive(Clone, Debug)]
pub struct ValueRanks {
    ranks: Vec<u32>,
}

impl ValueRanks {
    pub fn new(values: &[Rational]) -> ValueRanks {
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.par_sort_unstable_by(|&a, &b| values[a as usize].cmp(&values[b as usize]));
        let mut ranks = vec![0u32; values.len()];
        let mut rank = 0u32;
        for w in 0..order.len() {
            if w > 0 && values[order[w] as usize] != values[order[w - 1] as usize] {
                rank += 1;
            }
            ranks[order[w] as usize] = rank;
        }
        ValueRanks { ranks }
    }

    #[inline]
    pub fn rank(&self, i: usize) -> u32 {
        self.ranks[i]
    }

    #[inline]
    pub fn cmp(&self, a: usize, b: usize) -> Ordering {
        self.ranks[a].cmp(&self.ranks[b])
    }

    /// Best option rank for `color` (max for White, min for Black).
    pub fn best(&self, options: &[u32], color: Color) -> u32 {
        let it = options.iter().map(|&o| self.ranks[o as usize]);
        match color {
            Color::White => it.max(),
            Color::Black => it.min(),
        }
        .expect("options are never empty")
    }

    /// Options achieving the best value for `color`.
    pub fn greedy<'a>(&'a self, options: &'a [u32], color: Color) -> impl Iterator<Item = u32> + 'a {
        let best = self.best(options, color);
        options.iter().copied().filter(move |&o| self.ranks[o as usize] == best)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Perspective {
    /// The closure `T`, certifying the lower value.
    White,
    /// The closure `T'`, certifying the upper value.
    Black,
}

impl Perspective {
    pub fn color(self) -> Color {
        match self {
            Perspective::White => Color::White,
            Perspective::Black => Color::Black,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransientLabels {
    pub perspective: Perspective,
    /// Smallest `k` with the position in `T_k`, if any.
    pub labels: Vec<Option<u32>>,
    /// Positions that needed a label but got none: `x > 0` for White,
    /// `x < 1` for Black.
    pub uncovered: Vec<usize>,
}

impl TransientLabels {
    pub fn max_label(&self) -> Option<u32> {
        self.labels.iter().flatten().copied().max()
    }

    /// Label counts by value of the label.
    pub fn histogram(&self, range: std::ops::Range<usize>) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for l in self.labels[range].iter().flatten() {
            *h.entry(*l).or_default() += 1;
        }
        h
    }
}

fn needs_label(values: &[Rational], i: usize, perspective: Perspective) -> bool {
    use num_traits::{One, Signed};
    match perspective {
        Perspective::White => values[i].is_positive(),
        Perspective::Black => values[i] < Rational::one(),
    }
}

/// Computes the closure `T` (White) or `T'` (Black) with minimal labels.
pub fn compute_transient(values: &[Rational], graph: &GameGraph, perspective: Perspective) -> Result<TransientLabels> {
    let ranks = ValueRanks::new(values);
    compute_transient_ranked(values, &ranks, graph, perspective)
}

pub(crate) fn compute_transient_ranked(
    values: &[Rational],
    ranks: &ValueRanks,
    graph: &GameGraph,
    perspective: Perspective,
) -> Result<TransientLabels> {
    if values.len() != graph.len() {
        return Err(Error::Mismatch("values do not cover the graph".into()));
    }
    let me = perspective.color();
    let other = me.opponent();
    let n = graph.len();
    let mut labels: Vec<Option<u32>> = (0..n).map(|i| graph.status(i).is_terminal().then_some(0)).collect();
    let greedy: Vec<Vec<u32>> = (0..graph.ongoing()).into_par_iter().map(|i| ranks.greedy(graph.options(i, me), me).collect()).collect();
    let mut unlabeled: Vec<usize> = (0..graph.ongoing()).collect();
    let mut round = 0u32;
    loop {
        round += 1;
        let snapshot = &labels;
        let joins: Vec<bool> = unlabeled
            .par_iter()
            .map(|&i| {
                let inside = |o: &u32| snapshot[*o as usize].is_some();
                greedy[i].iter().any(inside) || graph.options(i, other).iter().all(inside)
            })
            .collect();
        let mut added = 0;
        let mut rest = Vec::with_capacity(unlabeled.len());
        for (&i, joined) in unlabeled.iter().zip(joins) {
            if joined {
                labels[i] = Some(round);
                added += 1;
            } else {
                rest.push(i);
            }
        }
        unlabeled = rest;
        if added == 0 {
            break;
        }
    }
    let uncovered = unlabeled.into_iter().filter(|&i| needs_label(values, i, perspective)).collect();
    Ok(TransientLabels { perspective, labels, uncovered })
}

/// Re-checks every label against its defining rule. Returns the first
/// position whose label has no witness.
pub fn verify_labels(t: &TransientLabels, values: &[Rational], graph: &GameGraph) -> Option<usize> {
    let ranks = ValueRanks::new(values);
    let me = t.perspective.color();
    (0..graph.len()).find(|&i| match t.labels[i] {
        None => false,
        Some(0) => !graph.status(i).is_terminal(),
        Some(k) => {
            if graph.status(i).is_terminal() {
                return true;
            }
            let below = |o: u32| matches!(t.labels[o as usize], Some(l) if l < k);
            let ok = ranks.greedy(graph.options(i, me), me).any(below) || graph.options(i, me.opponent()).iter().all(|&o| below(o));
            let minimal = !(ranks.greedy(graph.options(i, me), me).any(|o| matches!(t.labels[o as usize], Some(l) if l + 1 < k))
                || graph.options(i, me.opponent()).iter().all(|&o| matches!(t.labels[o as usize], Some(l) if l + 1 < k)));
            !(ok && minimal)
        }
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certification {
    pub alpha_equals_x: bool,
    pub beta_equals_x: bool,
    pub t: TransientLabels,
    pub t_prime: TransientLabels,
}

impl Certification {
    /// Positions preventing certification (uncovered in `T` or `T'`).
    pub fn witness(&self) -> (&[usize], &[usize]) {
        (&self.t.uncovered, &self.t_prime.uncovered)
    }
}

/// Decides whether the lower and upper values both equal `x`. `x` must
/// already satisfy the Richman equations.
pub fn certify(values: &[Rational], graph: &GameGraph) -> Result<Certification> {
    let ranks = ValueRanks::new(values);
    let t = compute_transient_ranked(values, &ranks, graph, Perspective::White)?;
    let t_prime = compute_transient_ranked(values, &ranks, graph, Perspective::Black)?;
    Ok(Certification { alpha_equals_x: t.uncovered.is_empty(), beta_equals_x: t_prime.uncovered.is_empty(), t, t_prime })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuiescenceClass {
    BareKings,
    GhostBishop,
    BlockedPawn,
    CorneredKing,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuiescenceRecord {
    pub index: usize,
    pub position: Position,
    pub class: QuiescenceClass,
}

/// Whether `min_b x(P_b) = max_w x(P_w)` at ongoing position `i`.
pub fn is_quiescent(ranks: &ValueRanks, graph: &GameGraph, i: usize) -> bool {
    i < graph.ongoing() && ranks.best(graph.white(i), Color::White) == ranks.best(graph.black(i), Color::Black)
}

/// Structural class of a quiescent position.
pub fn classify(pos: &Position) -> QuiescenceClass {
    let pieces = pos.pieces();
    let find = |color: Color, kind: PieceKind| pieces.iter().find(|(_, p)| p.color == color && p.kind == kind).map(|&(s, _)| s);
    let extras: Vec<_> = pieces.iter().filter(|(_, p)| p.kind != PieceKind::King).collect();
    if extras.is_empty() {
        return QuiescenceClass::BareKings;
    }
    if extras.len() > 1 {
        return QuiescenceClass::Other;
    }
    let (sq, piece) = *extras[0];
    let (Some(own_king), Some(enemy_king)) = (find(piece.color, PieceKind::King), find(piece.color.opponent(), PieceKind::King)) else {
        return QuiescenceClass::Other;
    };
    let ahead = |a: u8, b: u8| match piece.color {
        Color::White => a > b,
        Color::Black => a < b,
    };
    match piece.kind {
        PieceKind::Bishop if sq.is_light() != enemy_king.is_light() => QuiescenceClass::GhostBishop,
        PieceKind::Pawn if enemy_king.file == sq.file && ahead(enemy_king.rank, sq.rank) => QuiescenceClass::BlockedPawn,
        PieceKind::Pawn
            if own_king.file == sq.file
                && ahead(own_king.rank, sq.rank)
                && (sq.file == 0 || sq.file + 1 == pos.dims().files()) =>
        {
            QuiescenceClass::CorneredKing
        }
        _ => QuiescenceClass::Other,
    }
}

/// All quiescent positions, with symmetry classes expanded to their members.
pub fn quiescent_positions(values: &[Rational], space: &PositionSpace, graph: &GameGraph) -> Vec<QuiescenceRecord> {
    let ranks = ValueRanks::new(values);
    let mut out = Vec::new();
    for i in 0..graph.ongoing() {
        if is_quiescent(&ranks, graph, i) {
            for position in space.orbit(i) {
                let class = classify(&position);
                out.push(QuiescenceRecord { index: i, position, class });
            }
        }
    }
    out
}

/// Whether every quiescent position lies in `T`. When it does, full
/// coverage of all positions with `x > 0` must follow; a failure of that
/// implication is reported as an error.
pub fn quiescence_sufficiency_check(values: &[Rational], graph: &GameGraph) -> Result<bool> {
    let ranks = ValueRanks::new(values);
    let t = compute_transient_ranked(values, &ranks, graph, Perspective::White)?;
    let all_quiescent_in_t = (0..graph.ongoing()).filter(|&i| is_quiescent(&ranks, graph, i)).all(|i| t.labels[i].is_some());
    if all_quiescent_in_t && !t.uncovered.is_empty() {
        return Err(Error::Analysis(format!(
            "all quiescent positions are transient but {} positions with x > 0 are not",
            t.uncovered.len()
        )));
    }
    Ok(all_quiescent_in_t)
}

/// Per-piece-set certification summary, serialisable as the JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub dims: String,
    pub n: u32,
    pub violations: usize,
    pub piece_sets: Vec<PieceSetCertificate>,
    pub quiescent: BTreeMap<QuiescenceClass, usize>,
    pub quiescent_positions: Vec<(String, QuiescenceClass, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceSetCertificate {
    pub piece_set: String,
    pub positions: usize,
    pub alpha_equals_x: bool,
    pub beta_equals_x: bool,
    pub t_labels: BTreeMap<u32, usize>,
    pub t_prime_labels: BTreeMap<u32, usize>,
}

pub fn report(
    values: &[Rational],
    space: &PositionSpace,
    graph: &GameGraph,
    cert: &Certification,
    n: u32,
    violations: usize,
) -> CertificationReport {
    let piece_sets = space
        .piece_sets()
        .iter()
        .map(|set| {
            let range = space.set_range(set).expect("set is enumerated");
            let uncovered = |u: &[usize]| u.iter().any(|i| range.contains(i));
            PieceSetCertificate {
                piece_set: set.id(),
                positions: range.clone().map(|i| space.orbit_size(i)).sum(),
                alpha_equals_x: !uncovered(&cert.t.uncovered),
                beta_equals_x: !uncovered(&cert.t_prime.uncovered),
                t_labels: cert.t.histogram(range.clone()),
                t_prime_labels: cert.t_prime.histogram(range),
            }
        })
        .collect();
    let records = quiescent_positions(values, space, graph);
    let mut quiescent = BTreeMap::new();
    for r in &records {
        *quiescent.entry(r.class).or_default() += 1;
    }
    let quiescent_positions = records.iter().map(|r| (r.position.to_fen(), r.class, values[r.index].to_string())).collect();
    CertificationReport { dims: space.dims().to_string(), n, violations, piece_sets, quiescent, quiescent_positions }
}

/// Greedy move choice used by simulations and the play engine: among the
/// options of optimal value, take the one with the smallest transient label
/// of the mover's own closure (`T` for White, `T'` for Black); unlabeled
/// options come last, and remaining ties go to the smallest index.
pub fn greedy_choice(ranks: &ValueRanks, graph: &GameGraph, own_labels: &TransientLabels, i: usize, color: Color) -> u32 {
    ranks
        .greedy(graph.options(i, color), color)
        .min_by_key(|&o| (own_labels.labels[o as usize].unwrap_or(u32::MAX), o))
        .expect("options are never empty")
}

/// Status helper shared by simulations.
pub(crate) fn terminal_winner(graph: &GameGraph, i: usize) -> Option<Color> {
    match graph.status(i) {
        Status::WhiteWon => Some(Color::White),
        Status::BlackWon => Some(Color::Black),
        Status::Ongoing => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::BoardDims;
    use crate::space::SpaceOptions;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Two ongoing positions 0 and 1 that only lead to each other, plus two
    /// terminals nobody can reach. `x = 1/2` on the cycle satisfies the
    /// Richman equations, but neither side can force termination.
    fn cycle_game() -> (GameGraph, Vec<Rational>) {
        let g = GameGraph::from_lists(vec![vec![1], vec![0]], vec![vec![1], vec![0]], vec![true, false]).unwrap();
        (g, vec![r(1, 2), r(1, 2), r(1, 1), r(0, 1)])
    }

    #[test]
    fn cycle_game_is_not_certified() {
        let (g, x) = cycle_game();
        let c = certify(&x, &g).unwrap();
        assert!(!c.alpha_equals_x && !c.beta_equals_x);
        assert_eq!(c.witness(), (&[0usize, 1][..], &[0usize, 1][..]));
        assert!(!quiescence_sufficiency_check(&x, &g).unwrap());
    }

    #[test]
    fn terminal_only_space_is_vacuously_certified() {
        let g = GameGraph::from_lists(vec![], vec![], vec![true, false]).unwrap();
        let x = vec![r(1, 1), r(0, 1)];
        let c = certify(&x, &g).unwrap();
        assert!(c.alpha_equals_x && c.beta_equals_x);
        assert!(quiescence_sufficiency_check(&x, &g).unwrap());
    }

    #[test]
    fn bare_kings_certified_with_small_labels() {
        let space = PositionSpace::build(BoardDims::STANDARD, &["Kk".parse().unwrap()], SpaceOptions::default()).unwrap();
        let g = space.graph().unwrap();
        let x: Vec<Rational> = (0..space.len())
            .map(|i| match space.status(i) {
                Status::Ongoing => r(1, 2),
                Status::WhiteWon => r(1, 1),
                Status::BlackWon => r(0, 1),
            })
            .collect();
        let c = certify(&x, &g).unwrap();
        assert!(c.alpha_equals_x && c.beta_equals_x);
        assert!(c.t.max_label().unwrap() <= 7);
        assert!(c.t_prime.max_label().unwrap() <= 7);
        assert_eq!(verify_labels(&c.t, &x, &g), None);
        assert_eq!(verify_labels(&c.t_prime, &x, &g), None);
        let q = quiescent_positions(&x, &space, &g);
        assert!(q.iter().all(|r| r.class == QuiescenceClass::BareKings));
        assert!(quiescence_sufficiency_check(&x, &g).unwrap());
    }

    #[test]
    fn classification_shapes() {
        let d = BoardDims::STANDARD;
        let pos = |w: &[&str], b: &[&str]| Position::from_algebraic(d, w, b).unwrap();
        assert_eq!(classify(&pos(&["Ka8", "a6"], &["Kc7"])), QuiescenceClass::CorneredKing);
        assert_eq!(classify(&pos(&["Ke1", "b3"], &["Kb6"])), QuiescenceClass::BlockedPawn);
        assert_eq!(classify(&pos(&["Ke1", "Bg2"], &["Ka5"])), QuiescenceClass::GhostBishop);
        assert_eq!(classify(&pos(&["Ke1", "Bg2"], &["Ka4"])), QuiescenceClass::Other);
        assert_eq!(classify(&pos(&["Kc2"], &["Kf5"])), QuiescenceClass::BareKings);
    }

    #[test]
    fn ranks_order_values() {
        let vals = vec![r(1, 2), r(1, 3), r(1, 2), r(9, 10)];
        let ranks = ValueRanks::new(&vals);
        assert_eq!((0..4).map(|i| ranks.rank(i)).collect::<Vec<_>>(), [1, 0, 1, 2]);
        assert_eq!(ranks.greedy(&[0, 1, 2], Color::White).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(ranks.best(&[0, 1, 3], Color::Black), 0);
    }
}
