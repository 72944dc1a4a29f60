//! Value measures over the unit-interval cake and the pieces they evaluate.
//!
//! A [`ValueMeasure`] is a step density on `[0, 1]` with rational breakpoints
//! and rational heights. Every eval and mark answer is therefore an exact
//! rational, and the family is closed under all the cuts the division
//! algorithms make.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

/// Exact rational number used for every position and value in the engine.
pub type Rat = BigRational;

/// Index of an agent in a division instance.
pub type AgentId = usize;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q` or an integer.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rat::new(n, d))
        }
        None => Some(Rat::from_integer(s.parse().ok()?)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("breakpoints must start at 0, end at 1 and strictly increase")]
    BadBreakpoints,
    #[error("expected {expected} densities, found {found}")]
    DensityCount { expected: usize, found: usize },
    #[error("densities must be nonnegative")]
    NegativeDensity,
    #[error("measure has zero total value")]
    ZeroMass,
    #[error("measure total is {0}, expected 1")]
    NotNormalized(String),
    #[error("insufficient value: target exceeds the value of the piece")]
    InsufficientValue,
    #[error("negative target")]
    NegativeTarget,
}

/// Closed interval `[lo, hi]` inside the cake.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn unit() -> Self {
        Interval::new(Rat::zero(), Rat::one())
    }

    pub fn len(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rat(&self.lo), fmt_rat(&self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Identity of a piece within one division instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PieceId(pub u32);

impl fmt::Display for PieceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A finite union of disjoint intervals, plus the bookkeeping the
/// preference-graph reductions need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub id: PieceId,
    /// Sorted, pairwise disjoint, no empty members.
    pub intervals: Vec<Interval>,
    pub last_cutter: Option<AgentId>,
    /// The first-query piece this one descends from.
    pub origin: PieceId,
    /// Created by a cut after the first query.
    pub is_new: bool,
}

impl Piece {
    pub fn new(id: PieceId, intervals: Vec<Interval>) -> Self {
        Piece {
            id,
            intervals: normalize_intervals(intervals),
            last_cutter: None,
            origin: id,
            is_new: false,
        }
    }

    pub fn whole(id: PieceId) -> Self {
        Piece::new(id, vec![Interval::unit()])
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// A connected piece is a single interval (or nothing at all).
    pub fn is_connected(&self) -> bool {
        self.intervals.len() <= 1
    }

    pub fn length(&self) -> Rat {
        self.intervals.iter().map(Interval::len).sum()
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_intervals(f, &self.intervals)
    }
}

pub(crate) fn fmt_intervals(f: &mut fmt::Formatter<'_>, ivs: &[Interval]) -> fmt::Result {
    if ivs.is_empty() {
        return write!(f, "{{}}");
    }
    for (i, iv) in ivs.iter().enumerate() {
        if i > 0 {
            write!(f, " U ")?;
        }
        write!(f, "{iv}")?;
    }
    Ok(())
}

/// Sorts, drops empty intervals and merges touching ones.
pub fn normalize_intervals(mut ivs: Vec<Interval>) -> Vec<Interval> {
    ivs.retain(|iv| !iv.is_empty());
    ivs.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
    for iv in ivs {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// Union of two interval sets.
pub fn union_intervals(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    normalize_intervals(a.iter().chain(b).cloned().collect())
}

/// Points of `a` not in `b`, up to endpoints.
pub fn subtract_intervals(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for iv in a {
        let mut cur = iv.lo.clone();
        for cut in b {
            if cut.hi <= cur || cut.lo >= iv.hi {
                continue;
            }
            if cut.lo > cur {
                out.push(Interval::new(cur.clone(), cut.lo.clone()));
            }
            if cut.hi > cur {
                cur = cut.hi.clone();
            }
        }
        if cur < iv.hi {
            out.push(Interval::new(cur, iv.hi.clone()));
        }
    }
    normalize_intervals(out)
}

/// True when the two sets share a subinterval of positive length.
pub fn overlaps(a: &[Interval], b: &[Interval]) -> bool {
    a.iter()
        .any(|x| b.iter().any(|y| x.lo.clone().max(y.lo.clone()) < x.hi.clone().min(y.hi.clone())))
}

/// Splits an interval set at `x` into the part left of `x` and the rest.
pub fn split_intervals_at(ivs: &[Interval], x: &Rat) -> (Vec<Interval>, Vec<Interval>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for iv in ivs {
        if iv.hi <= *x {
            left.push(iv.clone());
        } else if iv.lo >= *x {
            right.push(iv.clone());
        } else {
            left.push(Interval::new(iv.lo.clone(), x.clone()));
            right.push(Interval::new(x.clone(), iv.hi.clone()));
        }
    }
    (normalize_intervals(left), normalize_intervals(right))
}

/// Piecewise-constant density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueMeasure {
    breakpoints: Vec<Rat>,
    densities: Vec<Rat>,
}

impl ValueMeasure {
    /// Builds a measure and checks that it integrates to exactly one.
    pub fn new(breakpoints: Vec<Rat>, densities: Vec<Rat>) -> Result<Self, MeasureError> {
        let m = ValueMeasure::unnormalized(breakpoints, densities)?;
        let total = m.total();
        if !total.is_one() {
            return Err(MeasureError::NotNormalized(fmt_rat(&total)));
        }
        Ok(m)
    }

    /// Builds a measure and rescales it to total one.
    pub fn normalized(breakpoints: Vec<Rat>, densities: Vec<Rat>) -> Result<Self, MeasureError> {
        let mut m = ValueMeasure::unnormalized(breakpoints, densities)?;
        let total = m.total();
        for d in &mut m.densities {
            *d = &*d / &total;
        }
        Ok(m)
    }

    fn unnormalized(breakpoints: Vec<Rat>, densities: Vec<Rat>) -> Result<Self, MeasureError> {
        if breakpoints.len() < 2
            || !breakpoints[0].is_zero()
            || !breakpoints[breakpoints.len() - 1].is_one()
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(MeasureError::BadBreakpoints);
        }
        if densities.len() + 1 != breakpoints.len() {
            return Err(MeasureError::DensityCount {
                expected: breakpoints.len() - 1,
                found: densities.len(),
            });
        }
        if densities.iter().any(Signed::is_negative) {
            return Err(MeasureError::NegativeDensity);
        }
        let m = ValueMeasure { breakpoints, densities };
        if m.total().is_zero() {
            return Err(MeasureError::ZeroMass);
        }
        Ok(m)
    }

    pub fn uniform() -> Self {
        ValueMeasure {
            breakpoints: vec![Rat::zero(), Rat::one()],
            densities: vec![Rat::one()],
        }
    }

    /// Random step density with at most `max_segments` segments and small
    /// rational breakpoints, normalized to one.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_segments: usize) -> Self {
        let segments = rng.gen_range(1..=max_segments.max(1));
        let denom = 24i64;
        let mut cuts: Vec<i64> = Vec::new();
        while cuts.len() + 1 < segments {
            let c = rng.gen_range(1..denom);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        let mut breakpoints = vec![Rat::zero()];
        breakpoints.extend(cuts.iter().map(|&c| rat(c, denom)));
        breakpoints.push(Rat::one());
        let mut densities: Vec<Rat> = (0..segments).map(|_| int(rng.gen_range(0..10))).collect();
        if densities.iter().all(Zero::is_zero) {
            let i = rng.gen_range(0..segments);
            densities[i] = Rat::one();
        }
        ValueMeasure::normalized(breakpoints, densities).expect("generated measure is valid")
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Rat] {
        &self.densities
    }

    fn total(&self) -> Rat {
        self.eval_interval(&Rat::zero(), &Rat::one())
    }

    fn segments(&self) -> impl Iterator<Item = (&Rat, &Rat, &Rat)> {
        self.breakpoints
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| (&w[0], &w[1], d))
    }

    /// Integral of the density over `[lo, hi]`.
    pub fn eval_interval(&self, lo: &Rat, hi: &Rat) -> Rat {
        let mut acc = Rat::zero();
        if lo >= hi {
            return acc;
        }
        for (s, e, d) in self.segments() {
            if e <= lo {
                continue;
            }
            if s >= hi {
                break;
            }
            let a = if s > lo { s } else { lo };
            let b = if e < hi { e } else { hi };
            if a < b && !d.is_zero() {
                acc += d * (b - a);
            }
        }
        acc
    }

    pub fn eval_intervals(&self, ivs: &[Interval]) -> Rat {
        ivs.iter().map(|iv| self.eval_interval(&iv.lo, &iv.hi)).sum()
    }

    pub fn eval(&self, p: &Piece) -> Rat {
        self.eval_intervals(&p.intervals)
    }

    /// Leftmost point `x` such that the part of `ivs` left of `x` is worth
    /// exactly `target`.
    pub fn mark_intervals(&self, ivs: &[Interval], target: &Rat) -> Result<Rat, MeasureError> {
        if target.is_negative() {
            return Err(MeasureError::NegativeTarget);
        }
        if *target > self.eval_intervals(ivs) {
            return Err(MeasureError::InsufficientValue);
        }
        let mut remaining = target.clone();
        for iv in ivs {
            for (s, e, d) in self.segments() {
                if *e <= iv.lo {
                    continue;
                }
                if *s >= iv.hi {
                    break;
                }
                let a = if *s > iv.lo { s } else { &iv.lo };
                let b = if *e < iv.hi { e } else { &iv.hi };
                if remaining.is_zero() {
                    return Ok(a.clone());
                }
                if d.is_zero() || a >= b {
                    continue;
                }
                let seg_val = d * (b - a);
                if remaining <= seg_val {
                    return Ok(a + &remaining / d);
                }
                remaining -= seg_val;
            }
        }
        // Only reachable when the remaining target is zero after the last
        // positive-density stretch.
        debug_assert!(remaining.is_zero());
        Ok(ivs.last().map(|iv| iv.hi.clone()).unwrap_or_else(Rat::zero))
    }

    pub fn mark(&self, p: &Piece, target: &Rat) -> Result<Rat, MeasureError> {
        self.mark_intervals(&p.intervals, target)
    }
}
