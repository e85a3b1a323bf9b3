//! Reports over a solved space: classifications, bids, denominators,
//! promotions and random-turn simulations.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{Color, Move, PieceKind, Position, Status};
use crate::certify::{self, Perspective};
use crate::error::{Error, Result};
use crate::pieceset::PieceSet;
use crate::solution::{MoveValue, Solution};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Normal,
    Zugzwang,
    Quiescent,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositionReport {
    pub position: Position,
    #[serde(serialize_with = "crate::json::rational")]
    pub value: Rational,
    pub classification: Classification,
    pub best_white_moves: Vec<MoveValue>,
    pub best_black_moves: Vec<MoveValue>,
    /// `(max_w x(P_w) - min_b x(P_b)) / 2`; negative exactly in zugzwang.
    #[serde(serialize_with = "crate::json::rational")]
    pub richman_bid_white: Rational,
}

/// Classification from the value and the best successor values.
pub fn classify(value: &Rational, max_w: &Rational, min_b: &Rational) -> Classification {
    if max_w == min_b {
        Classification::Quiescent
    } else if max_w < value && value < min_b {
        Classification::Zugzwang
    } else {
        Classification::Normal
    }
}

pub fn richman_bid(max_w: &Rational, min_b: &Rational) -> Rational {
    (max_w - min_b) / Rational::from_integer(BigInt::from(2))
}

pub fn report(sol: &Solution, pos: &Position) -> Result<PositionReport> {
    if pos.status().is_terminal() {
        return Err(Error::TerminalPosition);
    }
    let value = sol.value(pos)?;
    let best_white_moves = sol.best_moves(pos, Color::White)?;
    let best_black_moves = sol.best_moves(pos, Color::Black)?;
    let (max_w, min_b) = (&best_white_moves[0].value, &best_black_moves[0].value);
    Ok(PositionReport {
        position: pos.clone(),
        classification: classify(&value, max_w, min_b),
        richman_bid_white: richman_bid(max_w, min_b),
        value,
        best_white_moves,
        best_black_moves,
    })
}

/// Best successor values `(max_w, min_b)` at ongoing index `i`.
fn best_successors(sol: &Solution, i: usize) -> (&Rational, &Rational) {
    let g = sol.graph();
    let v = sol.values();
    let hi = g.white(i).iter().map(|&o| &v[o as usize]).max().expect("options are never empty");
    let lo = g.black(i).iter().map(|&o| &v[o as usize]).min().expect("options are never empty");
    (hi, lo)
}

/// Classification of ongoing position `i` of the space.
pub fn classify_index(sol: &Solution, i: usize) -> Classification {
    let (hi, lo) = best_successors(sol, i);
    classify(&sol.values()[i], hi, lo)
}

/// All zugzwang positions, with symmetry classes expanded.
pub fn zugzwang_census(sol: &Solution) -> Vec<(Position, Rational)> {
    let hits: Vec<usize> =
        (0..sol.graph().ongoing()).into_par_iter().filter(|&i| classify_index(sol, i) == Classification::Zugzwang).collect();
    hits.into_iter()
        .flat_map(|i| sol.space().orbit(i).into_iter().map(move |p| (p, sol.values()[i].clone())))
        .collect()
}

pub const DEFAULT_TRIAL_BOUND: u64 = 10_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct DenominatorCensus {
    pub piece_set: String,
    /// Denominator → number of positions carrying it.
    #[serde(serialize_with = "crate::json::biguint_map")]
    pub denominators: BTreeMap<BigUint, usize>,
    #[serde(serialize_with = "crate::json::biguint")]
    pub max: BigUint,
    pub factors: Vec<(u64, u32)>,
    #[serde(serialize_with = "crate::json::biguint")]
    pub cofactor: BigUint,
}

impl DenominatorCensus {
    /// Whether some denominator in the census is divisible by `p`.
    pub fn has_factor(&self, p: u64) -> bool {
        self.denominators.keys().any(|d| (d % p).is_zero())
    }

    /// Largest power of two dividing any denominator.
    pub fn max_two_power(&self) -> u64 {
        self.denominators.keys().map(|d| d.trailing_zeros().unwrap_or(0)).max().unwrap_or(0)
    }
}

/// Primes up to `bound` by a sieve of Eratosthenes.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Trial division by all primes up to `bound`. Returns the prime powers
/// found and the unfactored cofactor.
pub fn trial_factor(n: &BigUint, bound: u64) -> (Vec<(u64, u32)>, BigUint) {
    let mut rest = n.clone();
    let mut factors = Vec::new();
    if rest.is_zero() {
        return (factors, rest);
    }
    for p in primes_up_to(bound) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    }
    (factors, rest)
}

/// Multiset of denominators over the ongoing positions of `set`.
pub fn denominator_census(sol: &Solution, set: &PieceSet, bound: u64) -> Result<DenominatorCensus> {
    let space = sol.space();
    let range = space.set_range(set).ok_or_else(|| Error::NotInSpace(set.id()))?;
    let mut denominators = BTreeMap::new();
    for i in range.filter(|&i| space.status(i) == Status::Ongoing) {
        let d = sol.values()[i].denom().magnitude().clone();
        *denominators.entry(d).or_default() += space.orbit_size(i);
    }
    let max = denominators.keys().next_back().cloned().unwrap_or_else(BigUint::one);
    let (factors, cofactor) = trial_factor(&max, bound);
    Ok(DenominatorCensus { piece_set: set.id(), denominators, max, factors, cofactor })
}

#[derive(Clone, Debug, Serialize)]
pub struct PromotionReport {
    pub mover: Color,
    pub knight: MoveValue,
    pub queen: MoveValue,
    /// The promotion better for the mover, `None` if equal.
    pub preferred: Option<PieceKind>,
}

/// Compares the knight and queen promotions of the pawn about to promote.
pub fn promotion_report(sol: &Solution, pos: &Position) -> Result<PromotionReport> {
    let dims = pos.dims();
    let pawn = pos.pieces().iter().find(|(sq, p)| {
        p.kind == PieceKind::Pawn
            && match p.color {
                Color::White => sq.rank + 2 == dims.ranks(),
                Color::Black => sq.rank == 1,
            }
    });
    let Some(&(_, pawn)) = pawn else {
        return Err(Error::Analysis(format!("no pawn about to promote in {pos}")));
    };
    let mover = pawn.color;
    let opts = sol.options(pos, mover)?;
    let pick = |kind: PieceKind| {
        opts.iter()
            .filter(|o| o.mv.promotion == Some(kind))
            .cloned()
            .reduce(|a, b| match mover {
                Color::White if b.value > a.value => b,
                Color::Black if b.value < a.value => b,
                _ => a,
            })
            .ok_or_else(|| Error::Analysis(format!("no promotion to {} in {pos}", kind.letter())))
    };
    let (knight, queen) = (pick(PieceKind::Knight)?, pick(PieceKind::Queen)?);
    let preferred = match (knight.value.cmp(&queen.value), mover) {
        (std::cmp::Ordering::Equal, _) => None,
        (std::cmp::Ordering::Greater, Color::White) | (std::cmp::Ordering::Less, Color::Black) => Some(PieceKind::Knight),
        _ => Some(PieceKind::Queen),
    };
    Ok(PromotionReport { mover, knight, queen, preferred })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SimulationResult {
    pub trials: u64,
    pub white_wins: u64,
    pub black_wins: u64,
    pub unresolved: u64,
}

impl SimulationResult {
    pub fn white_frequency(&self) -> f64 {
        self.white_wins as f64 / self.trials as f64
    }
}

pub const DEFAULT_HORIZON: u32 = 10_000;
const BATCH: u64 = 4096;

/// Random-turn games with a fair coin, both sides playing greedily with the
/// minimal-label tie-break. Batches draw from independent ChaCha streams,
/// so results do not depend on the thread count.
pub fn random_turn_simulate(sol: &Solution, pos: &Position, trials: u64, horizon: u32, seed: u64) -> Result<SimulationResult> {
    let start = sol.space().require_index(pos)?;
    let (g, ranks) = (sol.graph(), sol.ranks());
    let (t, t_prime) = (sol.labels(Perspective::White), sol.labels(Perspective::Black));
    let batches = trials.div_ceil(BATCH);
    let parts: Vec<SimulationResult> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut out = SimulationResult::default();
            let count = BATCH.min(trials - b * BATCH);
            let mut memo: HashMap<(usize, bool), u32> = HashMap::new();
            for _ in 0..count {
                out.trials += 1;
                let mut i = start;
                let mut ply = 0;
                loop {
                    if let Some(w) = certify::terminal_winner(g, i) {
                        match w {
                            Color::White => out.white_wins += 1,
                            Color::Black => out.black_wins += 1,
                        }
                        break;
                    }
                    if ply == horizon {
                        out.unresolved += 1;
                        break;
                    }
                    let white = rng.random_bool(0.5);
                    i = *memo.entry((i, white)).or_insert_with(|| {
                        if white {
                            certify::greedy_choice(ranks, g, t, i, Color::White)
                        } else {
                            certify::greedy_choice(ranks, g, t_prime, i, Color::Black)
                        }
                    }) as usize;
                    ply += 1;
                }
            }
            out
        })
        .collect();
    Ok(parts.into_iter().fold(SimulationResult::default(), |a, b| SimulationResult {
        trials: a.trials + b.trials,
        white_wins: a.white_wins + b.white_wins,
        black_wins: a.black_wins + b.black_wins,
        unresolved: a.unresolved + b.unresolved,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TraceOutcome {
    Terminal(Status),
    /// The pair (position, coin phase) repeated: play loops forever.
    Cycle { start: usize, length: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub color: Color,
    #[serde(rename = "move")]
    pub mv: Move,
    #[serde(serialize_with = "crate::json::rational")]
    pub value: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub moves: Vec<TraceStep>,
    pub outcome: TraceOutcome,
}

/// Greedy play under a prescribed coin sequence, repeated cyclically.
pub fn forced_sequence_trace(sol: &Solution, pos: &Position, coins: &[Color]) -> Result<Trace> {
    if coins.is_empty() {
        return Err(Error::Analysis("empty coin sequence".into()));
    }
    let mut seen: HashMap<(Position, usize), usize> = HashMap::new();
    let mut moves = Vec::new();
    let mut cur = pos.clone();
    loop {
        let status = cur.status();
        if status.is_terminal() {
            return Ok(Trace { moves, outcome: TraceOutcome::Terminal(status) });
        }
        let phase = moves.len() % coins.len();
        if let Some(&start) = seen.get(&(cur.clone(), phase)) {
            return Ok(Trace { outcome: TraceOutcome::Cycle { start, length: moves.len() - start }, moves });
        }
        seen.insert((cur.clone(), phase), moves.len());
        let color = coins[phase];
        let mv = sol.greedy_move(&cur, color)?;
        moves.push(TraceStep { color, mv: mv.mv, value: mv.value });
        cur = mv.position;
    }
}

/// Three-sigma half-width for a Bernoulli frequency estimate.
pub fn three_sigma(p: f64, trials: u64) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Decimal approximation of a value, for display.
pub fn approx(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Whether `v` is strictly negative.
pub fn is_negative_bid(v: &Rational) -> bool {
    v.is_negative()
}

/// One CSV line per ongoing position of `set`: FEN, value, decimal.
pub fn census_csv(sol: &Solution, set: &PieceSet) -> Result<String> {
    let space = sol.space();
    let range = space.set_range(set).ok_or_else(|| Error::NotInSpace(set.id()))?;
    let mut out = String::from("fen,value,approx\n");
    for i in range {
        for p in space.orbit(i) {
            let v = &sol.values()[i];
            out.push_str(&format!("{},{}/{},{:.10}\n", p.to_fen(), v.numer(), v.denom(), approx(v)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::BoardDims;
    use crate::space::{PositionSpace, SpaceOptions};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn solved(dims: &str, root: &str, n: u32) -> Solution {
        let space = PositionSpace::for_closure(dims.parse().unwrap(), &[root.parse().unwrap()], SpaceOptions::default()).unwrap();
        let (sol, v) = Solution::solve(space, n).unwrap();
        assert_eq!(v.count, 0);
        sol
    }

    #[test]
    fn trial_factor_splits() {
        let n = BigUint::from(229627505902878720u64);
        let (f, c) = trial_factor(&n, 1000);
        assert_eq!(f, [(2, 40), (3, 3), (5, 1), (7, 1), (13, 1), (17, 1)]);
        assert!(c.is_one());
        let big = BigUint::from(1_000_000_007u64) * 12u32;
        let (f, c) = trial_factor(&big, 100);
        assert_eq!(f, [(2, 2), (3, 1)]);
        assert_eq!(c, BigUint::from(1_000_000_007u64));
        assert_eq!(primes_up_to(30), [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn small_board_knight_zugzwang() {
        let sol = solved("4x4", "KNk", 300);
        let d = BoardDims::new(4, 4).unwrap();
        let p = Position::from_algebraic(d, &["Ka1", "Nd1"], &["Kd4"]).unwrap();
        let rep = report(&sol, &p).unwrap();
        assert_eq!(rep.value, r(31, 48));
        let moves: Vec<String> = rep.best_white_moves.iter().map(|m| m.mv.to_string()).collect();
        assert_eq!(moves.len(), 3);
        assert!(rep.best_white_moves.iter().all(|m| m.value == r(61, 96)));
        assert!(zugzwang_census(&sol).iter().any(|(q, _)| *q == p));

        let trace = forced_sequence_trace(&sol, &p, &[Color::White]).unwrap();
        assert!(matches!(trace.outcome, TraceOutcome::Cycle { .. }));
    }

    #[test]
    fn bid_identities_hold() {
        let sol = solved("4x4", "KNk", 300);
        for i in 0..sol.graph().ongoing() {
            let (hi, lo) = best_successors(&sol, i);
            let bid = richman_bid(hi, lo);
            let x = &sol.values()[i];
            assert_eq!(*x, lo + &bid);
            assert_eq!(*x, hi - &bid);
            assert_eq!(is_negative_bid(&bid), classify_index(&sol, i) == Classification::Zugzwang);
        }
    }

    #[test]
    fn bare_kings_simulate_half() {
        let d = BoardDims::new(4, 4).unwrap();
        let space = PositionSpace::build(d, &["Kk".parse().unwrap()], SpaceOptions::default()).unwrap();
        let (sol, _) = Solution::solve(space, 60).unwrap();
        let p = Position::from_algebraic(d, &["Ka1"], &["Kd4"]).unwrap();
        let a = random_turn_simulate(&sol, &p, 20_000, DEFAULT_HORIZON, 7).unwrap();
        let b = random_turn_simulate(&sol, &p, 20_000, DEFAULT_HORIZON, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.unresolved, 0);
        assert!((a.white_frequency() - 0.5).abs() < three_sigma(0.5, a.trials));
        assert!(zugzwang_census(&sol).is_empty());
    }

    #[test]
    fn promotion_needs_pawn_on_seventh() {
        let sol = solved("4x4", "KPk", 300);
        let d = BoardDims::new(4, 4).unwrap();
        let p = Position::from_algebraic(d, &["Ka1", "b2"], &["Kd4"]).unwrap();
        assert!(matches!(promotion_report(&sol, &p), Err(Error::Analysis(_))));
        let q = Position::from_algebraic(d, &["Ka1", "b3"], &["Kd1"]).unwrap();
        let rep = promotion_report(&sol, &q).unwrap();
        assert_eq!(rep.mover, Color::White);
        assert_eq!(rep.knight.mv.promotion, Some(PieceKind::Knight));
    }
}
