//! A Richman function over an enumerated space, together with its
//! transient labels, ready for lookups.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::board::{Color, Move, Position, Status};
use crate::certify::{self, Certification, Perspective, TransientLabels, ValueRanks};
use crate::error::{Error, Result};
use crate::limit::{self, ViolationReport};
use crate::space::{GameGraph, PositionSpace};
use crate::Rational;

/// A move together with the value of the position it leads to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MoveValue {
    #[serde(rename = "move")]
    pub mv: Move,
    pub position: Position,
    #[serde(serialize_with = "crate::json::rational")]
    pub value: Rational,
}

pub struct Solution {
    space: PositionSpace,
    graph: GameGraph,
    values: Vec<Rational>,
    ranks: ValueRanks,
    cert: Certification,
    n: Option<u32>,
}

impl std::fmt::Debug for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solution")
            .field("dims", &self.space.dims())
            .field("positions", &self.space.len())
            .field("n", &self.n)
            .field("alpha_equals_x", &self.cert.alpha_equals_x)
            .field("beta_equals_x", &self.cert.beta_equals_x)
            .finish()
    }
}

fn check_values(space: &PositionSpace, values: &[Rational]) -> Result<()> {
    if values.len() != space.len() {
        return Err(Error::Mismatch(format!("{} values for {} positions", values.len(), space.len())));
    }
    for (i, v) in values.iter().enumerate() {
        let ok = match space.status(i) {
            Status::WhiteWon => v.is_one(),
            Status::BlackWon => v.is_zero(),
            Status::Ongoing => *v >= Rational::zero() && *v <= Rational::one(),
        };
        if !ok {
            return Err(Error::Mismatch(format!("value {v} out of range at {}", space.position(i))));
        }
    }
    Ok(())
}

impl Solution {
    /// Wraps a value vector and computes both transient closures.
    pub fn new(space: PositionSpace, graph: GameGraph, values: Vec<Rational>, n: Option<u32>) -> Result<Solution> {
        check_values(&space, &values)?;
        let ranks = ValueRanks::new(&values);
        let t = certify::compute_transient_ranked(&values, &ranks, &graph, Perspective::White)?;
        let t_prime = certify::compute_transient_ranked(&values, &ranks, &graph, Perspective::Black)?;
        let cert = Certification { alpha_equals_x: t.uncovered.is_empty(), beta_equals_x: t_prime.uncovered.is_empty(), t, t_prime };
        Ok(Solution { space, graph, values, ranks, cert, n })
    }

    /// Wraps stored values and labels without recomputing the closures.
    pub fn with_labels(
        space: PositionSpace,
        graph: GameGraph,
        values: Vec<Rational>,
        t: TransientLabels,
        t_prime: TransientLabels,
        n: Option<u32>,
    ) -> Result<Solution> {
        check_values(&space, &values)?;
        if t.labels.len() != space.len() || t_prime.labels.len() != space.len() {
            return Err(Error::Mismatch("labels do not cover the space".into()));
        }
        let ranks = ValueRanks::new(&values);
        let cert = Certification { alpha_equals_x: t.uncovered.is_empty(), beta_equals_x: t_prime.uncovered.is_empty(), t, t_prime };
        Ok(Solution { space, graph, values, ranks, cert, n })
    }

    /// Iterates both threshold sequences to `n`, builds the candidate and
    /// checks it. Returns the violation report alongside; the solution is
    /// only meaningful when the report is empty.
    pub fn solve(space: PositionSpace, n: u32) -> Result<(Solution, ViolationReport)> {
        let graph = space.graph()?;
        let (candidate, violations) = limit::candidate_at(&space, &graph, n)?;
        let sol = Solution::new(space, graph, candidate.values, Some(n))?;
        Ok((sol, violations))
    }

    pub fn space(&self) -> &PositionSpace {
        &self.space
    }

    pub fn graph(&self) -> &GameGraph {
        &self.graph
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn ranks(&self) -> &ValueRanks {
        &self.ranks
    }

    pub fn certification(&self) -> &Certification {
        &self.cert
    }

    pub fn n(&self) -> Option<u32> {
        self.n
    }

    pub fn is_certified(&self) -> bool {
        self.cert.alpha_equals_x && self.cert.beta_equals_x
    }

    pub fn labels(&self, perspective: Perspective) -> &TransientLabels {
        match perspective {
            Perspective::White => &self.cert.t,
            Perspective::Black => &self.cert.t_prime,
        }
    }

    /// Value of `pos`. Positions outside the space are looked up through
    /// their colour flip, using `x(flip P) = 1 - x(P)`.
    pub fn value(&self, pos: &Position) -> Result<Rational> {
        if let Some(i) = self.space.index_of(pos) {
            return Ok(self.values[i].clone());
        }
        match self.space.index_of(&pos.color_flip()) {
            Some(i) => Ok(Rational::one() - &self.values[i]),
            None => Err(Error::NotInSpace(pos.to_fen())),
        }
    }

    /// Transient label of `pos`; flipped positions swap `T` and `T'`.
    pub fn label(&self, pos: &Position, perspective: Perspective) -> Result<Option<u32>> {
        if let Some(i) = self.space.index_of(pos) {
            return Ok(self.labels(perspective).labels[i]);
        }
        let other = match perspective {
            Perspective::White => Perspective::Black,
            Perspective::Black => Perspective::White,
        };
        match self.space.index_of(&pos.color_flip()) {
            Some(i) => Ok(self.labels(other).labels[i]),
            None => Err(Error::NotInSpace(pos.to_fen())),
        }
    }

    /// All options of `color` with their successor values, in move order.
    pub fn options(&self, pos: &Position, color: Color) -> Result<Vec<MoveValue>> {
        pos.options(color)?
            .into_iter()
            .map(|(mv, position)| Ok(MoveValue { value: self.value(&position)?, mv, position }))
            .collect()
    }

    /// Options achieving the best successor value for `color`.
    pub fn best_moves(&self, pos: &Position, color: Color) -> Result<Vec<MoveValue>> {
        let opts = self.options(pos, color)?;
        let best = match color {
            Color::White => opts.iter().map(|o| &o.value).max(),
            Color::Black => opts.iter().map(|o| &o.value).min(),
        }
        .cloned()
        .expect("options are never empty");
        Ok(opts.into_iter().filter(|o| o.value == best).collect())
    }

    /// The greedy move, ties broken by the smallest label in the mover's
    /// own closure and then by move order.
    pub fn greedy_move(&self, pos: &Position, color: Color) -> Result<MoveValue> {
        let perspective = match color {
            Color::White => Perspective::White,
            Color::Black => Perspective::Black,
        };
        let mut best: Option<(u32, MoveValue)> = None;
        for mv in self.best_moves(pos, color)? {
            let label = self.label(&mv.position, perspective)?.unwrap_or(u32::MAX);
            if best.as_ref().is_none_or(|(l, _)| label < *l) {
                best = Some((label, mv));
            }
        }
        Ok(best.expect("options are never empty").1)
    }
}
