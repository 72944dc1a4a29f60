//! Disconnected division by repeating a VIP routine on what is left over.
//!
//! [`weak_reduction`] rotates the VIP through all agents, lifting a VIP
//! guarantee of `1/M` to every agent. [`strong_reduction`] keeps one VIP
//! and pushes its share towards `1/n`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::allocation::{Allocation, QueryEvent, RoundTrace};
use crate::connected::{divide_4_connected_on, divide_n_connected_on};
use crate::error::DivisionError;
use crate::lnbound::{ceil_coef_ln, ln_enclosure};
use crate::measure::{int, union_intervals, AgentId, Interval, Rat, ValueMeasure};
use crate::queries::QueryLog;

/// A routine producing an envy-free allocation of `cake` that favours `vip`.
pub trait VipRoutine {
    fn run(&mut self, cake: Vec<Interval>, measures: &[ValueMeasure], vip: AgentId) -> Result<Allocation, DivisionError>;
}

impl<F> VipRoutine for F
where
    F: FnMut(Vec<Interval>, &[ValueMeasure], AgentId) -> Result<Allocation, DivisionError>,
{
    fn run(&mut self, cake: Vec<Interval>, measures: &[ValueMeasure], vip: AgentId) -> Result<Allocation, DivisionError> {
        self(cake, measures, vip)
    }
}

/// Running union of several partial allocations.
struct Accumulator {
    bundles: Vec<Vec<Interval>>,
    log: QueryLog,
    piece_count: usize,
    notes: Vec<String>,
    events: Vec<QueryEvent>,
    rounds: Vec<RoundTrace>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            bundles: vec![Vec::new(); n],
            log: QueryLog::new(n),
            piece_count: 0,
            notes: Vec::new(),
            events: Vec::new(),
            rounds: Vec::new(),
        }
    }

    fn totals(&self, measures: &[ValueMeasure]) -> Vec<Rat> {
        measures.iter().zip(&self.bundles).map(|(m, b)| m.eval_intervals(b)).collect()
    }

    fn absorb(&mut self, part: &Allocation) {
        for (acc, b) in self.bundles.iter_mut().zip(&part.bundles) {
            *acc = union_intervals(acc, b);
        }
        self.log.merge(&part.log);
        self.piece_count += part.piece_count;
        self.events.extend(part.events.iter().cloned());
    }

    fn into_allocation(self, measures: &[ValueMeasure], remainder: Vec<Interval>) -> Allocation {
        let mut a = Allocation::new(measures, self.bundles, remainder, self.log, self.piece_count);
        a.events = self.events;
        a.notes = self.notes;
        a.rounds = self.rounds;
        a
    }
}

fn allocated(part: &Allocation) -> Vec<Interval> {
    part.bundles.iter().fold(Vec::new(), |acc, b| union_intervals(&acc, b))
}

fn trace(
    stage: usize,
    t: usize,
    vip: AgentId,
    part: &Allocation,
    before: &[Rat],
    measures: &[ValueMeasure],
    cake: &[Interval],
) -> RoundTrace {
    let gained = part.values();
    RoundTrace {
        stage,
        t,
        vip,
        allocated: allocated(part),
        cumulative: before.iter().zip(&gained).map(|(b, g)| b + g).collect(),
        gained,
        round_cake: measures.iter().map(|m| m.eval_intervals(cake)).collect(),
    }
}

/// Runs `routine` on successive remainders with VIPs `0, 1, …, n-1`.
///
/// Stops early once nothing is left. Inner round traces (if the routine
/// records any) are kept with their stage set; otherwise one trace per stage.
pub fn weak_reduction(
    cake: Vec<Interval>,
    measures: &[ValueMeasure],
    mut routine: impl VipRoutine,
) -> Result<Allocation, DivisionError> {
    let n = measures.len();
    let mut acc = Accumulator::new(n);
    let mut remainder = cake;
    for vip in 0..n {
        if remainder.is_empty() {
            acc.notes.push(format!("nothing left after {vip} stage(s)"));
            break;
        }
        let before = acc.totals(measures);
        let part = routine.run(remainder.clone(), measures, vip)?;
        if part.rounds.is_empty() {
            acc.rounds.push(trace(vip, 1, vip, &part, &before, measures, &remainder));
        } else {
            for r in &part.rounds {
                let mut r = r.clone();
                r.stage = vip;
                r.cumulative = r.cumulative.iter().zip(&before).map(|(c, b)| c + b).collect();
                acc.rounds.push(r);
            }
        }
        acc.absorb(&part);
        remainder = part.remainder;
    }
    Ok(acc.into_allocation(measures, remainder))
}

/// Share guaranteed to the VIP by one run of the successive-Equalize
/// algorithm: `1 / (2^(n-2) + 1)`.
pub fn vip_share_denominator(n: usize) -> usize {
    assert!(n >= 2, "at least two agents");
    (1usize << (n - 2)) + 1
}

/// Number of repetitions needed for a VIP share of `(1-eps)/n` when each
/// repetition gives the VIP `1/m` of what is left: `ceil(m ln(1/eps) / n)`.
pub fn strong_rounds(n: usize, m: usize, epsilon: &Rat) -> Result<usize, DivisionError> {
    check_epsilon(epsilon)?;
    let coef = Rat::new(BigInt::from(m), BigInt::from(n));
    let t = ceil_coef_ln(&coef, &(Rat::one() / epsilon));
    t.to_usize()
        .ok_or_else(|| DivisionError::InvalidInput("epsilon too small".into()))
}

fn check_epsilon(epsilon: &Rat) -> Result<(), DivisionError> {
    if !epsilon.is_positive() || *epsilon >= Rat::one() {
        return Err(DivisionError::InvalidInput(format!(
            "epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    Ok(())
}

/// Lower bound on the VIP's holding after `t` rounds, as a fraction of the
/// cake: `(1 - (1 - n/m)^t) / n`.
pub fn strong_round_bound(n: usize, m: usize, t: usize) -> Rat {
    let q = Rat::one() - Rat::new(BigInt::from(n), BigInt::from(m));
    (Rat::one() - num_traits::pow::pow(q, t)) / int(n as i64)
}

/// Repeats the successive-Equalize algorithm with a fixed VIP on `cake` and
/// its remainders until the VIP holds `(1-eps)/n` of `cake`.
pub fn strong_reduction(measures: &[ValueMeasure], vip: AgentId, epsilon: &Rat) -> Result<Allocation, DivisionError> {
    strong_reduction_on(vec![Interval::unit()], measures, vip, epsilon)
}

pub fn strong_reduction_on(
    cake: Vec<Interval>,
    measures: &[ValueMeasure],
    vip: AgentId,
    epsilon: &Rat,
) -> Result<Allocation, DivisionError> {
    let n = measures.len();
    if n < 2 {
        return Err(DivisionError::InvalidInput("strong reduction needs at least 2 agents".into()));
    }
    if vip >= n {
        return Err(DivisionError::InvalidInput(format!("no agent with index {vip}")));
    }
    let m = vip_share_denominator(n);
    let rounds = strong_rounds(n, m, epsilon)?;
    let whole = measures[vip].eval_intervals(&cake);
    let mut acc = Accumulator::new(n);
    acc.notes.push(format!("rounds planned: {rounds}"));
    let mut remainder = cake;
    for t in 1..=rounds {
        if remainder.is_empty() {
            acc.notes.push(format!("nothing left after {} round(s)", t - 1));
            break;
        }
        let before = acc.totals(measures);
        let part = divide_n_connected_on(remainder.clone(), measures, vip)?;
        let tr = trace(0, t, vip, &part, &before, measures, &remainder);
        let held_before = &before[vip];
        let floor_gain = (&whole - int(n as i64) * held_before) / int(m as i64);
        if tr.gained[vip] < floor_gain {
            return Err(DivisionError::Contradiction(format!(
                "round {t}: vip gained {} below {}",
                tr.gained[vip], floor_gain
            )));
        }
        let floor_total = &whole * strong_round_bound(n, m, t);
        if tr.cumulative[vip] < floor_total {
            return Err(DivisionError::Contradiction(format!(
                "round {t}: vip holds {} below {}",
                tr.cumulative[vip], floor_total
            )));
        }
        acc.rounds.push(tr);
        acc.absorb(&part);
        remainder = part.remainder;
    }
    Ok(acc.into_allocation(measures, remainder))
}

/// Every agent gets `(1-eps)/n`: weak reduction over strong reduction.
pub fn divide_n_disconnected(measures: &[ValueMeasure], epsilon: &Rat) -> Result<Allocation, DivisionError> {
    check_epsilon(epsilon)?;
    weak_reduction(vec![Interval::unit()], measures, |cake, ms: &[ValueMeasure], vip| {
        strong_reduction_on(cake, ms, vip, epsilon)
    })
}

/// Four agents, every one at least a quarter: weak reduction over the
/// four-agent connected algorithm.
pub fn divide_4_disconnected(measures: &[ValueMeasure]) -> Result<Allocation, DivisionError> {
    if measures.len() != 4 {
        return Err(DivisionError::InvalidInput(format!(
            "four-agent division needs 4 agents, found {}",
            measures.len()
        )));
    }
    weak_reduction(vec![Interval::unit()], measures, |cake, ms: &[ValueMeasure], vip| {
        divide_4_connected_on(cake, ms, vip, None)
    })
}

/// Pinned constant for [`query_envelope`], counting primitive queries.
pub const QUERY_ENVELOPE_C: u64 = 2;

/// Upper envelope `c * 4^n * ln(1/eps)` for primitive queries, rounded up.
pub fn query_envelope(c: u64, n: usize, epsilon: &Rat) -> BigInt {
    let ln = ln_enclosure(&(Rat::one() / epsilon), 32).hi;
    let bound = ln * Rat::from_integer(BigInt::from(c) * BigInt::from(4u64).pow(n as u32));
    bound.ceil().to_integer()
}
