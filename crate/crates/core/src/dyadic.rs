//! Finite-horizon thresholds α_n and β_n.
//!
//! Every threshold at horizon `n` is a dyadic rational `num / 2^n` with
//! `0 <= num <= 2^n`. A [`ThresholdVector`] stores all numerators at the
//! common scale `2^n` as fixed-width little-endian limb rows, so that one
//! step of the recursion is a max, a min and one addition per position:
//!
//! ```text
//! num_{n+1}(P) = max_w num_n(P_w) + min_b num_n(P_b)      (scale 2^(n+1))
//! ```
//!
//! Terminal positions keep the boundary values 0 and 1 at every horizon.
//! Alongside the rows, each position keeps a 64-bit prefix of its value so
//! most comparisons never touch the full rows.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::Status;
use crate::error::{Error, Result};
use crate::space::GameGraph;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Lower thresholds: start from 0 on ongoing positions.
    Alpha,
    /// Upper thresholds: start from 1 on ongoing positions.
    Beta,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kind::Alpha => "alpha",
            Kind::Beta => "beta",
        })
    }
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Kind::Alpha),
            "beta" => Ok(Kind::Beta),
            _ => Err(Error::Format(format!("unknown threshold kind {s:?}"))),
        }
    }
}

#[inline]
fn limbs_for(n: u32) -> usize {
    // numerators need n + 1 bits
    (n as usize + 1).div_ceil(64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdVector {
    kind: Kind,
    n: u32,
    len: usize,
    limbs: usize,
    data: Vec<u64>,
    keys: Vec<u64>,
}

impl ThresholdVector {
    /// Horizon-0 thresholds for every position of `graph`.
    pub fn init(kind: Kind, graph: &GameGraph) -> ThresholdVector {
        let len = graph.len();
        let data = (0..len)
            .map(|i| match (graph.status(i), kind) {
                (Status::WhiteWon, _) | (Status::Ongoing, Kind::Beta) => 1,
                _ => 0,
            })
            .collect::<Vec<u64>>();
        let mut v = ThresholdVector { kind, n: 0, len, limbs: 1, data, keys: vec![0; len] };
        v.refresh_keys();
        v
    }

    /// Rebuilds a vector from raw numerators at scale `2^n`.
    pub fn from_numerators(kind: Kind, n: u32, numerators: &[BigUint]) -> Result<ThresholdVector> {
        let limbs = limbs_for(n);
        let one = BigUint::one() << n;
        let mut data = vec![0u64; numerators.len() * limbs];
        for (row, num) in data.chunks_exact_mut(limbs).zip(numerators) {
            if *num > one {
                return Err(Error::Format(format!("numerator exceeds 2^{n}")));
            }
            for (dst, d) in row.iter_mut().zip(num.iter_u64_digits()) {
                *dst = d;
            }
        }
        let mut v = ThresholdVector { kind, n, len: numerators.len(), limbs, data, keys: vec![0; numerators.len()] };
        v.refresh_keys();
        Ok(v)
    }

    #[inline]
    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Horizon: number of recursion steps applied.
    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.limbs..(i + 1) * self.limbs]
    }

    pub fn numerator(&self, i: usize) -> BigUint {
        let digits: Vec<u32> = self.row(i).iter().flat_map(|&l| [l as u32, (l >> 32) as u32]).collect();
        BigUint::new(digits)
    }

    pub fn numerators(&self) -> Vec<BigUint> {
        (0..self.len).map(|i| self.numerator(i)).collect()
    }

    /// The threshold at position `i` as a reduced fraction.
    pub fn value(&self, i: usize) -> Rational {
        Rational::new(self.numerator(i).into(), (BigUint::one() << self.n).into())
    }

    /// Value as a float (for diagnostics only).
    pub fn approx(&self, i: usize) -> f64 {
        self.keys[i] as f64 / (1u64 << 63) as f64
    }

    fn refresh_keys(&mut self) {
        let (n, limbs) = (self.n, self.limbs);
        let data = &self.data;
        self.keys.par_iter_mut().enumerate().for_each(|(i, k)| *k = prefix_key(&data[i * limbs..(i + 1) * limbs], n));
    }

    /// Compares the values at `a` and `b` exactly.
    #[inline]
    pub fn cmp_at(&self, a: usize, b: usize) -> Ordering {
        match self.keys[a].cmp(&self.keys[b]) {
            Ordering::Equal if a != b => cmp_rows(self.row(a), self.row(b)),
            o => o,
        }
    }

    /// One application of the recursion over `graph`.
    pub fn step(&self, graph: &GameGraph) -> Result<ThresholdVector> {
        if graph.len() != self.len {
            return Err(Error::Mismatch(format!("graph has {} positions, vector {}", graph.len(), self.len)));
        }
        let n = self.n + 1;
        let limbs = limbs_for(n);
        let mut data = vec![0u64; self.len * limbs];
        let mut keys = vec![0u64; self.len];
        let top = BigUint::one() << n;
        let top_row: Vec<u64> = {
            let mut r = vec![0u64; limbs];
            for (dst, d) in r.iter_mut().zip(top.iter_u64_digits()) {
                *dst = d;
            }
            r
        };
        let ongoing = graph.ongoing();
        data.par_chunks_mut(limbs).zip(keys.par_iter_mut()).enumerate().for_each(|(i, (row, key))| {
            if i < ongoing {
                let w = self.best(graph.white(i), Ordering::Greater);
                let b = self.best(graph.black(i), Ordering::Less);
                add_rows(self.row(w), self.row(b), row);
            } else if graph.status(i) == Status::WhiteWon {
                row.copy_from_slice(&top_row);
            }
            *key = prefix_key(row, n);
        });
        Ok(ThresholdVector { kind: self.kind, n, len: self.len, limbs, data, keys })
    }

    #[inline]
    fn best(&self, options: &[u32], want: Ordering) -> usize {
        let mut best = options[0] as usize;
        for &o in &options[1..] {
            if self.cmp_at(o as usize, best) == want {
                best = o as usize;
            }
        }
        best
    }

    /// Index of an option of maximal (White) or minimal (Black) value.
    pub fn best_option(&self, options: &[u32], maximize: bool) -> usize {
        self.best(options, if maximize { Ordering::Greater } else { Ordering::Less })
    }

    /// Compares `self` at horizon n with `later` at a horizon m >= n,
    /// position by position. Returns the first index violating `self <= later`
    /// (for `Ordering::Less`) or `self >= later` (for `Ordering::Greater`).
    pub fn first_order_violation(&self, later: &ThresholdVector, want: Ordering) -> Option<usize> {
        assert!(later.n >= self.n && later.len == self.len);
        let shift = later.n - self.n;
        (0..self.len).find(|&i| {
            let a = self.numerator(i) << shift;
            let b = later.numerator(i);
            a != b && a.cmp(&b) != want
        })
    }
}

/// Top 64 bits of the value `num / 2^n`, i.e. `floor(num * 2^63 / 2^n)`.
#[inline]
fn prefix_key(row: &[u64], n: u32) -> u64 {
    if n <= 63 {
        return row[0] << (63 - n);
    }
    let s = (n - 63) as usize;
    let (idx, off) = (s / 64, s % 64);
    let lo = row[idx] >> off;
    let hi = if off > 0 && idx + 1 < row.len() { row[idx + 1] << (64 - off) } else { 0 };
    lo | hi
}

#[inline]
fn cmp_rows(a: &[u64], b: &[u64]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

#[inline]
fn add_rows(a: &[u64], b: &[u64], out: &mut [u64]) {
    let mut carry = false;
    for j in 0..a.len() {
        let (s1, c1) = a[j].overflowing_add(b[j]);
        let (s2, c2) = s1.overflowing_add(carry as u64);
        out[j] = s2;
        carry = c1 | c2;
    }
    if a.len() < out.len() {
        out[a.len()] = carry as u64;
    } else {
        debug_assert!(!carry);
    }
}

/// Options for [`run`].
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Hand a checkpoint to the sink every this many steps (0 disables).
    pub checkpoint_every: u32,
    /// Check the monotonicity of every step (α non-decreasing, β
    /// non-increasing). Costs one extra pass per step.
    pub verify_monotone: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { checkpoint_every: 100, verify_monotone: false }
    }
}

/// Iterates from `start` until horizon `n_target`, calling `checkpoint` on
/// every `checkpoint_every`-th horizon.
pub fn run_from(
    start: ThresholdVector,
    graph: &GameGraph,
    n_target: u32,
    opts: RunOptions,
    mut checkpoint: impl FnMut(&ThresholdVector) -> Result<()>,
) -> Result<ThresholdVector> {
    if start.n > n_target {
        return Err(Error::Mismatch(format!("checkpoint horizon {} is past target {n_target}", start.n)));
    }
    let mut v = start;
    while v.n < n_target {
        let next = v.step(graph)?;
        if opts.verify_monotone {
            let want = match v.kind {
                Kind::Alpha => Ordering::Less,
                Kind::Beta => Ordering::Greater,
            };
            if let Some(i) = v.first_order_violation(&next, want) {
                return Err(Error::Analysis(format!("{} not monotone at position {i}, horizon {}", v.kind, next.n)));
            }
        }
        v = next;
        if opts.checkpoint_every > 0 && v.n.is_multiple_of(opts.checkpoint_every) {
            checkpoint(&v)?;
        }
    }
    Ok(v)
}

/// Thresholds of `kind` at horizon `n_target`.
pub fn run(graph: &GameGraph, kind: Kind, n_target: u32) -> Result<ThresholdVector> {
    run_from(ThresholdVector::init(kind, graph), graph, n_target, RunOptions { checkpoint_every: 0, verify_monotone: false }, |_| Ok(()))
}

/// `max_P (β_n(P) - α_n(P))` as an exact rational.
pub fn gap(alpha: &ThresholdVector, beta: &ThresholdVector) -> Result<Rational> {
    if alpha.kind != Kind::Alpha || beta.kind != Kind::Beta || alpha.n != beta.n || alpha.len != beta.len {
        return Err(Error::Mismatch("gap needs alpha and beta vectors of equal horizon and length".into()));
    }
    let best = (0..alpha.len)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (alpha.numerator(i), beta.numerator(i));
            if b >= a {
                b - a
            } else {
                BigUint::zero()
            }
        })
        .max()
        .unwrap_or_default();
    Ok(Rational::new(best.into(), (BigUint::one() << alpha.n).into()))
}
