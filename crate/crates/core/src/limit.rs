//! Recovering exact limits from threshold intervals.
//!
//! For a horizon `n`, the candidate value of a position is the simplest
//! rational (smallest denominator) in `[α_n(P), β_n(P)]`. The candidate is
//! accepted once it satisfies the Richman equation
//! `x(P) = (max_w x(P_w) + min_b x(P_b)) / 2` at every ongoing position, with
//! the boundary values 1 and 0 at terminal positions.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::board::{Color, Status};
use crate::dyadic::{Kind, ThresholdVector};
use crate::error::{Error, Result};
use crate::space::PositionSpace;
use crate::Rational;

/// The rational with the smallest denominator in the closed interval
/// `[lo, hi]`; among integers, the smallest. Requires `0 <= lo <= hi`.
pub fn simplest_in_interval(lo: &Rational, hi: &Rational) -> Result<Rational> {
    if lo > hi {
        return Err(Error::EmptyInterval { lo: lo.to_string(), hi: hi.to_string() });
    }
    if lo.is_negative() {
        return Err(Error::Analysis(format!("interval [{lo}, {hi}] reaches below zero")));
    }
    let (a, b) = (lo.numer().magnitude().clone(), lo.denom().magnitude().clone());
    let (c, d) = (hi.numer().magnitude().clone(), hi.denom().magnitude().clone());
    let (p, q) = simplest_fraction(a, b, c, d);
    Ok(Rational::new(p.into(), q.into()))
}

/// Simplest fraction in `[a/b, c/d]`, by walking the continued fraction
/// expansions of both ends until they part.
pub(crate) fn simplest_fraction(mut a: BigUint, mut b: BigUint, mut c: BigUint, mut d: BigUint) -> (BigUint, BigUint) {
    let mut terms: Vec<BigUint> = Vec::new();
    loop {
        let (q, r) = a.div_rem(&b);
        if r.is_zero() {
            terms.push(q);
            break;
        }
        let next = &q + 1u32;
        if &next * &d <= c {
            terms.push(next);
            break;
        }
        // q < lo <= hi < q + 1: recurse on the reciprocals of the
        // fractional parts, which swaps the ends.
        let c_rem = c - &q * &d;
        terms.push(q);
        (a, b, c, d) = (d, c_rem, b, r);
    }
    // fold [t0; t1, ..., tk] from the back
    let mut num = terms.pop().unwrap();
    let mut den = BigUint::one();
    while let Some(t) = terms.pop() {
        (num, den) = (t * &num + den, num);
    }
    (num, den)
}

/// Simplest rational between two dyadic thresholds at scale `2^n`.
pub fn simplest_dyadic(lo_num: &BigUint, hi_num: &BigUint, n: u32) -> Rational {
    let scale = BigUint::one() << n;
    if lo_num == hi_num {
        return Rational::new(lo_num.clone().into(), scale.into());
    }
    let (p, q) = simplest_fraction(lo_num.clone(), scale.clone(), hi_num.clone(), scale);
    Rational::new(p.into(), q.into())
}

/// A candidate Richman function read off the interval `[α_n, β_n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateFunction {
    pub n: u32,
    pub values: Vec<Rational>,
}

/// Builds `s_n`. Terminal positions get their boundary values.
pub fn build_candidate(alpha: &ThresholdVector, beta: &ThresholdVector, space: &PositionSpace) -> Result<CandidateFunction> {
    if alpha.kind() != Kind::Alpha || beta.kind() != Kind::Beta || alpha.n() != beta.n() {
        return Err(Error::Mismatch("candidate needs alpha and beta at the same horizon".into()));
    }
    if alpha.len() != space.len() || beta.len() != space.len() {
        return Err(Error::Mismatch("threshold vectors do not cover the space".into()));
    }
    let n = alpha.n();
    let values = (0..space.len())
        .into_par_iter()
        .map(|i| match space.status(i) {
            Status::WhiteWon => Rational::one(),
            Status::BlackWon => Rational::zero(),
            Status::Ongoing => {
                let (lo, hi) = (alpha.numerator(i), beta.numerator(i));
                if lo > hi {
                    // cannot happen for genuine thresholds
                    panic!("alpha exceeds beta at position {i}");
                }
                simplest_dyadic(&lo, &hi, n)
            }
        })
        .collect();
    Ok(CandidateFunction { n, values })
}

/// Failures of the Richman equation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ViolationReport {
    pub count: usize,
    /// Indices of the violating positions, ascending.
    pub positions: Vec<usize>,
}

/// Best option value of `color` at ongoing position `index`, with options
/// re-derived from the move rules.
pub(crate) fn best_successor(values: &[Rational], space: &PositionSpace, index: usize, color: Color) -> Result<Rational> {
    let pos = space.position(index);
    let mut best: Option<&Rational> = None;
    for (_, succ) in pos.options(color)? {
        let j = space.index_of(&succ).ok_or_else(|| Error::NotClosed(pos.to_fen()))?;
        let v = &values[j];
        best = match best {
            None => Some(v),
            Some(b) if (color == Color::White && v > b) || (color == Color::Black && v < b) => Some(v),
            keep => keep,
        };
    }
    Ok(best.expect("ongoing positions have options").clone())
}

/// Signed residual `x(P) - (max_w x(P_w) + min_b x(P_b)) / 2`; zero at
/// terminal positions carrying their boundary value.
pub fn residual(c: &CandidateFunction, space: &PositionSpace, index: usize) -> Result<Rational> {
    match space.status(index) {
        Status::WhiteWon => Ok(&c.values[index] - Rational::one()),
        Status::BlackWon => Ok(c.values[index].clone()),
        Status::Ongoing => {
            let hi = best_successor(&c.values, space, index, Color::White)?;
            let lo = best_successor(&c.values, space, index, Color::Black)?;
            Ok(&c.values[index] - (hi + lo) / Rational::from_integer(BigInt::from(2)))
        }
    }
}

/// Checks the Richman equation at every position (boundary values
/// included), re-deriving move options from the rules.
pub fn richman_violations(c: &CandidateFunction, space: &PositionSpace) -> Result<ViolationReport> {
    if c.values.len() != space.len() {
        return Err(Error::Mismatch("candidate does not cover the space".into()));
    }
    let flags: Vec<Result<bool>> = (0..space.len()).into_par_iter().map(|i| Ok(!residual(c, space, i)?.is_zero())).collect();
    let mut report = ViolationReport::default();
    for (i, f) in flags.into_iter().enumerate() {
        if f? {
            report.positions.push(i);
        }
    }
    report.count = report.positions.len();
    Ok(report)
}

/// Runs both threshold sequences from scratch to horizon `n` and returns
/// the candidate together with its violation report.
pub fn candidate_at(space: &PositionSpace, graph: &crate::space::GameGraph, n: u32) -> Result<(CandidateFunction, ViolationReport)> {
    let alpha = crate::dyadic::run(graph, Kind::Alpha, n)?;
    let beta = crate::dyadic::run(graph, Kind::Beta, n)?;
    let c = build_candidate(&alpha, &beta, space)?;
    let v = richman_violations(&c, space)?;
    Ok((c, v))
}
