//! Bidding-game sessions under the open scheme, and the engine policy.
//!
//! The player who made the last move bids for the next one; in the initial
//! position Black counts as the last mover. A bid is an integer in `[-n, n]`
//! where `n` is the bidder's chip count. The other player then either
//! accepts, receiving the bid and letting the bidder move, or rejects,
//! paying the same amount and moving. A negative bid reverses the direction
//! of the transfer. A choice whose payment the chooser cannot cover is
//! refused. Capturing a king ends the session.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::board::{Color, Move, PieceKind, Position, Square, Status};
use crate::error::Result;
use crate::solution::Solution;
use crate::Rational;

pub const DEFAULT_PLY_CAP: u32 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid session setup: {0}")]
    Setup(String),
    #[error("action not allowed in phase {0}")]
    WrongPhase(String),
    #[error("it is {expected}'s turn to act, not {got}'s")]
    WrongSide { expected: Color, got: Color },
    #[error("bid {amount} outside [-{max}, {max}]")]
    BidOutOfRange { amount: i64, max: u64 },
    #[error("{payer} cannot pay {amount} chips holding {available}")]
    Unaffordable { payer: Color, amount: u64, available: u64 },
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("session is over")]
    Over,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chips {
    pub white: u64,
    pub black: u64,
}

impl Chips {
    pub fn of(&self, c: Color) -> u64 {
        match c {
            Color::White => self.white,
            Color::Black => self.black,
        }
    }

    fn of_mut(&mut self, c: Color) -> &mut u64 {
        match c {
            Color::White => &mut self.white,
            Color::Black => &mut self.black,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase")]
pub enum Phase {
    AwaitingBid { bidder: Color },
    AwaitingChoice { chooser: Color, bid: i64 },
    AwaitingMove { mover: Color },
    Finished { winner: Color },
    Unresolved,
}

impl Phase {
    /// The side that must act, if any.
    pub fn actor(self) -> Option<Color> {
        match self {
            Phase::AwaitingBid { bidder } => Some(bidder),
            Phase::AwaitingChoice { chooser, .. } => Some(chooser),
            Phase::AwaitingMove { mover } => Some(mover),
            Phase::Finished { .. } | Phase::Unresolved => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Phase::AwaitingBid { .. } => "awaiting_bid",
            Phase::AwaitingChoice { .. } => "awaiting_choice",
            Phase::AwaitingMove { .. } => "awaiting_move",
            Phase::Finished { .. } => "finished",
            Phase::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Accept,
    Reject,
}

impl std::str::FromStr for Choice {
    type Err = SessionError;
    fn from_str(s: &str) -> std::result::Result<Choice, SessionError> {
        match s {
            "accept" => Ok(Choice::Accept),
            "reject" => Ok(Choice::Reject),
            _ => Err(SessionError::Setup(format!("unknown choice {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    Bid { amount: i64 },
    Choose { choice: Choice },
    Move { from: Square, to: Square, promotion: Option<PieceKind> },
}

impl Action {
    pub fn from_move(m: &Move) -> Action {
        Action::Move { from: m.from, to: m.to, promotion: m.promotion }
    }
}

/// One protocol event. The log of a session replays to the same state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum Event {
    Bid { by: Color, amount: i64 },
    Choice { by: Color, choice: Choice, payer: Color, amount: u64, mover: Color },
    Move { by: Color, coord: String, fen: String },
    Finished { winner: Color },
    Unresolved { plies: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct GameSession {
    pub id: String,
    pub position: Position,
    pub chips_total: u64,
    pub chips: Chips,
    pub phase: Phase,
    pub last_mover: Color,
    pub human_side: Color,
    pub plies: u32,
    pub ply_cap: u32,
    pub history: Vec<Event>,
}

/// Chip transfer implied by a choice: `(payer, amount, mover)`.
fn transfer(bidder: Color, bid: i64, choice: Choice) -> (Color, u64, Color) {
    let chooser = bidder.opponent();
    let amount = bid.unsigned_abs();
    match (choice, bid >= 0) {
        (Choice::Accept, true) => (bidder, amount, bidder),
        (Choice::Accept, false) => (chooser, amount, bidder),
        (Choice::Reject, true) => (chooser, amount, chooser),
        (Choice::Reject, false) => (bidder, amount, chooser),
    }
}

impl GameSession {
    /// Starts a session; Black counts as having made the last move.
    pub fn new(id: impl Into<String>, position: Position, chips_total: u64, white_chips: u64, human_side: Color) -> Result<GameSession, SessionError> {
        if chips_total == 0 {
            return Err(SessionError::Setup("chips_total must be at least 1".into()));
        }
        if white_chips > chips_total {
            return Err(SessionError::Setup(format!("white chips {white_chips} exceed total {chips_total}")));
        }
        if position.status().is_terminal() {
            return Err(SessionError::Setup("position is already decided".into()));
        }
        Ok(GameSession {
            id: id.into(),
            position,
            chips_total,
            chips: Chips { white: white_chips, black: chips_total - white_chips },
            phase: Phase::AwaitingBid { bidder: Color::Black },
            last_mover: Color::Black,
            human_side,
            plies: 0,
            ply_cap: DEFAULT_PLY_CAP,
            history: Vec::new(),
        })
    }

    pub fn actor(&self) -> Option<Color> {
        self.phase.actor()
    }

    pub fn is_over(&self) -> bool {
        self.actor().is_none()
    }

    /// Whether the chooser can afford `choice` after a bid of `bid`.
    pub fn affordable(&self, bidder: Color, bid: i64, choice: Choice) -> bool {
        let (payer, amount, _) = transfer(bidder, bid, choice);
        amount <= self.chips.of(payer)
    }

    pub fn apply(&mut self, by: Color, action: Action) -> Result<(), SessionError> {
        let Some(actor) = self.actor() else {
            return Err(SessionError::Over);
        };
        if by != actor {
            return Err(SessionError::WrongSide { expected: actor, got: by });
        }
        match (self.phase, action) {
            (Phase::AwaitingBid { bidder }, Action::Bid { amount }) => {
                let max = self.chips.of(bidder);
                if amount.unsigned_abs() > max {
                    return Err(SessionError::BidOutOfRange { amount, max });
                }
                self.history.push(Event::Bid { by, amount });
                self.phase = Phase::AwaitingChoice { chooser: bidder.opponent(), bid: amount };
            }
            (Phase::AwaitingChoice { chooser, bid }, Action::Choose { choice }) => {
                let (payer, amount, mover) = transfer(chooser.opponent(), bid, choice);
                let available = self.chips.of(payer);
                if amount > available {
                    return Err(SessionError::Unaffordable { payer, amount, available });
                }
                *self.chips.of_mut(payer) -= amount;
                *self.chips.of_mut(payer.opponent()) += amount;
                self.history.push(Event::Choice { by, choice, payer, amount, mover });
                self.phase = Phase::AwaitingMove { mover };
            }
            (Phase::AwaitingMove { mover }, Action::Move { from, to, promotion }) => {
                let (mv, next) = self
                    .position
                    .find_move(mover, from, to, promotion)
                    .map_err(|e| SessionError::IllegalMove(e.to_string()))?;
                self.history.push(Event::Move { by, coord: mv.coord(), fen: next.to_fen() });
                self.position = next;
                self.last_mover = mover;
                self.plies += 1;
                self.phase = match self.position.status() {
                    Status::WhiteWon => Phase::Finished { winner: Color::White },
                    Status::BlackWon => Phase::Finished { winner: Color::Black },
                    Status::Ongoing if self.plies >= self.ply_cap => Phase::Unresolved,
                    Status::Ongoing => Phase::AwaitingBid { bidder: mover },
                };
                match self.phase {
                    Phase::Finished { winner } => self.history.push(Event::Finished { winner }),
                    Phase::Unresolved => self.history.push(Event::Unresolved { plies: self.plies }),
                    _ => {}
                }
            }
            (phase, _) => return Err(SessionError::WrongPhase(phase.name().into())),
        }
        Ok(())
    }

    /// A uniformly random legal action for the side to act.
    pub fn random_action(&self, rng: &mut impl Rng) -> Option<Action> {
        match self.phase {
            Phase::AwaitingBid { bidder } => {
                let n = self.chips.of(bidder) as i64;
                Some(Action::Bid { amount: rng.random_range(-n..=n) })
            }
            Phase::AwaitingChoice { chooser, bid } => {
                let ok: Vec<Choice> =
                    [Choice::Accept, Choice::Reject].into_iter().filter(|&c| self.affordable(chooser.opponent(), bid, c)).collect();
                ok.choose(rng).map(|&choice| Action::Choose { choice })
            }
            Phase::AwaitingMove { mover } => {
                let opts = self.position.options(mover).ok()?;
                opts.choose(rng).map(|(m, _)| Action::from_move(m))
            }
            Phase::Finished { .. } | Phase::Unresolved => None,
        }
    }
}

/// `round(r)` with halves rounded toward zero.
pub fn round_half_toward_zero(r: &Rational) -> BigInt {
    let a = r.abs();
    let (q, rem) = a.numer().div_rem(a.denom());
    let twice = rem * 2;
    let m = if twice > *a.denom() { q + 1 } else { q };
    if r.is_negative() {
        -m
    } else {
        m
    }
}

/// Chip bid for a Richman bid given as a share of `total`.
pub fn chip_bid(richman_bid: &Rational, total: u64, max: u64) -> i64 {
    let raw = round_half_toward_zero(&(richman_bid * Rational::from_integer(BigInt::from(total))));
    let max = max.min(i64::MAX as u64) as i64;
    raw.to_i64().unwrap_or(if raw.is_negative() { -max } else { max }).clamp(-max, max)
}

/// The engine's action for the side to act: bids are the Richman bid in
/// chips; choices take the branch with the larger safety margin (ties
/// accept); moves are greedy with the minimal-label tie-break.
pub fn engine_policy(sol: &Solution, session: &GameSession) -> Result<Action> {
    let me = session.actor().ok_or(SessionError::Over)?;
    let pos = &session.position;
    match session.phase {
        Phase::AwaitingBid { bidder } => {
            let rep = analytics::report(sol, pos)?;
            Ok(Action::Bid { amount: chip_bid(&rep.richman_bid_white, session.chips_total, session.chips.of(bidder)) })
        }
        Phase::AwaitingChoice { chooser, bid } => {
            let bidder = chooser.opponent();
            let can_accept = session.affordable(bidder, bid, Choice::Accept);
            let can_reject = session.affordable(bidder, bid, Choice::Reject);
            let choice = match (can_accept, can_reject) {
                (true, false) => Choice::Accept,
                (false, true) => Choice::Reject,
                _ => {
                    let n = Rational::from_integer(BigInt::from(session.chips_total));
                    let black = |delta: i64| Rational::from_integer(BigInt::from(session.chips.black as i64 + delta)) / &n;
                    let x_w = sol.greedy_move(pos, Color::White)?.value;
                    let x_b = sol.greedy_move(pos, Color::Black)?.value;
                    let (accept, reject) = match me {
                        // Black bid: accepting hands Black the move and `bid` to White.
                        Color::White => (x_b - black(-bid), x_w - black(bid)),
                        // White bid: accepting hands White the move and `bid` to Black.
                        Color::Black => (black(bid) - x_w, black(-bid) - x_b),
                    };
                    if accept >= reject {
                        Choice::Accept
                    } else {
                        Choice::Reject
                    }
                }
            };
            Ok(Action::Choose { choice })
        }
        Phase::AwaitingMove { mover } => Ok(Action::from_move(&sol.greedy_move(pos, mover)?.mv)),
        Phase::Finished { .. } | Phase::Unresolved => Err(SessionError::Over.into()),
    }
}

/// Plays the engine's actions until it is `human`'s turn or the session ends.
pub fn run_engine(sol: &Solution, session: &mut GameSession) -> Result<usize> {
    let mut steps = 0;
    while let Some(actor) = session.actor() {
        if actor == session.human_side {
            break;
        }
        let action = engine_policy(sol, session)?;
        session.apply(actor, action)?;
        steps += 1;
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::BoardDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rook_position() -> Position {
        Position::from_algebraic(BoardDims::STANDARD, &["Kd6", "Rh8"], &["Kd8"]).unwrap()
    }

    #[test]
    fn rounding_ties_go_toward_zero() {
        assert_eq!(round_half_toward_zero(&r(5, 2)), BigInt::from(2));
        assert_eq!(round_half_toward_zero(&r(-5, 2)), BigInt::from(-2));
        assert_eq!(round_half_toward_zero(&r(7, 3)), BigInt::from(2));
        assert_eq!(round_half_toward_zero(&r(-8, 3)), BigInt::from(-3));
        assert_eq!(chip_bid(&r(1, 4), 8, 3), 2);
        assert_eq!(chip_bid(&r(1, 4), 8, 1), 1);
        assert_eq!(chip_bid(&r(-95, 32256), 1000, 10), -3);
        assert_eq!(chip_bid(&r(-95, 32256), 1_000_000, 10), -10);
    }

    #[test]
    fn open_scheme_transfers() {
        let mut s = GameSession::new("t", rook_position(), 10, 4, Color::White).unwrap();
        assert_eq!(s.actor(), Some(Color::Black));
        assert_eq!(s.apply(Color::White, Action::Bid { amount: 1 }), Err(SessionError::WrongSide { expected: Color::Black, got: Color::White }));
        assert_eq!(s.apply(Color::Black, Action::Bid { amount: 7 }), Err(SessionError::BidOutOfRange { amount: 7, max: 6 }));
        s.apply(Color::Black, Action::Bid { amount: 5 }).unwrap();
        // White cannot pay 5 with 4 chips
        assert!(matches!(s.apply(Color::White, Action::Choose { choice: Choice::Reject }), Err(SessionError::Unaffordable { .. })));
        s.apply(Color::White, Action::Choose { choice: Choice::Accept }).unwrap();
        assert_eq!(s.chips, Chips { white: 9, black: 1 });
        assert_eq!(s.phase, Phase::AwaitingMove { mover: Color::Black });
        let d = BoardDims::STANDARD;
        s.apply(Color::Black, Action::Move { from: d.parse_square("d8").unwrap(), to: d.parse_square("e8").unwrap(), promotion: None }).unwrap();
        assert_eq!(s.phase, Phase::AwaitingBid { bidder: Color::Black });
        s.apply(Color::Black, Action::Bid { amount: -1 }).unwrap();
        s.apply(Color::White, Action::Choose { choice: Choice::Reject }).unwrap();
        // reject of a negative bid: the bidder pays and the chooser moves
        assert_eq!(s.chips, Chips { white: 10, black: 0 });
        assert!(matches!(s.apply(Color::White, Action::Bid { amount: 0 }), Err(SessionError::WrongPhase(_))));
        s.apply(Color::White, Action::Move { from: d.parse_square("h8").unwrap(), to: d.parse_square("e8").unwrap(), promotion: None }).unwrap();
        assert_eq!(s.phase, Phase::Finished { winner: Color::White });
        assert_eq!(s.apply(Color::White, Action::Bid { amount: 0 }), Err(SessionError::Over));
        assert!(matches!(s.history.last(), Some(Event::Finished { winner: Color::White })));
    }

    #[test]
    fn random_sequences_conserve_chips() {
        let d = BoardDims::new(4, 4).unwrap();
        let start = Position::from_algebraic(d, &["Ka1", "Nd1"], &["Kd4"]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..2000 {
            let total = rng.random_range(1..40);
            let mut s = GameSession::new(format!("{k}"), start.clone(), total, rng.random_range(0..=total), Color::White).unwrap();
            s.ply_cap = 50;
            while let Some(actor) = s.actor() {
                // occasionally try garbage first; it must be refused without effect
                if rng.random_bool(0.2) {
                    let before = (s.chips, s.phase, s.history.len());
                    let junk = Action::Bid { amount: total as i64 + 1 };
                    assert!(s.apply(actor, junk).is_err());
                    assert!(s.apply(actor.opponent(), Action::Choose { choice: Choice::Accept }).is_err());
                    assert_eq!(before, (s.chips, s.phase, s.history.len()));
                }
                let a = s.random_action(&mut rng).unwrap();
                s.apply(actor, a).unwrap();
                assert_eq!(s.chips.white + s.chips.black, total);
            }
        }
    }
}
