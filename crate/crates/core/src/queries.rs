//! Equalize and Equalize* queries, answered through stick division.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::measure::{fmt_rat, AgentId, Piece, PieceId, Rat, ValueMeasure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("degenerate sticks: every length is zero")]
    DegenerateSticks,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {pieces} pieces on the table")]
    KExceedsPieces { k: usize, pieces: usize },
}

/// Largest `l` such that at least `k` sticks of length `l` can be cut from
/// `lengths`.
///
/// The optimum is always of the form `lengths[j] / i` with `1 <= i <= k`,
/// so the candidates are enumerated from the longest down.
pub fn stick_division(lengths: &[Rat], k: usize) -> Result<Rat, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroK);
    }
    let mut candidates: Vec<Rat> = Vec::new();
    for v in lengths.iter().filter(|v| !v.is_zero()) {
        for i in 1..=k {
            candidates.push(v / Rat::from_integer((i as i64).into()));
        }
    }
    if candidates.is_empty() {
        return Err(QueryError::DegenerateSticks);
    }
    candidates.sort_unstable_by(|a, b| b.cmp(a));
    candidates.dedup();
    candidates
        .into_iter()
        .find(|l| stick_count(lengths, l) >= k)
        .ok_or(QueryError::DegenerateSticks)
}

/// Number of whole sticks of length `l` obtainable from `lengths`.
pub fn stick_count(lengths: &[Rat], l: &Rat) -> usize {
    lengths
        .iter()
        .map(|v| {
            let q = v / l;
            let f = q.numer().div_floor(q.denom());
            usize::try_from(f).unwrap_or(usize::MAX)
        })
        .sum()
}

fn ceil_ratio(v: &Rat, l: &Rat) -> usize {
    let q = v / l;
    let c = q.numer().div_ceil(q.denom());
    usize::try_from(c).expect("cut count fits in usize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Equalize,
    EqualizeStar,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryKind::Equalize => write!(f, "Equalize"),
            QueryKind::EqualizeStar => write!(f, "Equalize*"),
        }
    }
}

/// What a produced piece is for, from the cutter's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PieceRole {
    Equalized,
    Leftover,
    Reserve,
}

/// Marks on one piece, given as cumulative values from its left end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceCut {
    pub piece: PieceId,
    pub targets: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutPlan {
    pub agent: AgentId,
    pub kind: QueryKind,
    pub k: usize,
    pub l_star: Rat,
    pub cuts: Vec<PieceCut>,
    /// Targets are lengths rather than values (the agent values every
    /// piece at zero).
    pub by_length: bool,
    /// Filled in when the plan is applied to a table.
    pub produced: Vec<(PieceId, PieceRole)>,
}

impl CutPlan {
    pub fn cut_count(&self) -> usize {
        self.cuts.iter().map(|c| c.targets.len()).sum()
    }
}

/// Answer to `Equalize(k)` for an agent facing `pieces`.
///
/// Every piece worth more than `l*` is cut into `l*`-valued pieces from
/// its left end, leaving a smaller leftover on the right if needed.
pub fn plan_equalize(
    agent: AgentId,
    measure: &ValueMeasure,
    pieces: &[Piece],
    k: usize,
) -> Result<CutPlan, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroK);
    }
    let values: Vec<Rat> = pieces.iter().map(|p| measure.eval(p)).collect();
    let mut plan = CutPlan {
        agent,
        kind: QueryKind::Equalize,
        k,
        l_star: Rat::zero(),
        cuts: Vec::new(),
        by_length: false,
        produced: Vec::new(),
    };
    if values.iter().all(Zero::is_zero) {
        if k > pieces.len() {
            let longest = pieces
                .iter()
                .max_by(|a, b| a.length().cmp(&b.length()).then(b.id.cmp(&a.id)))
                .ok_or(QueryError::KExceedsPieces { k, pieces: 0 })?;
            let parts = k - pieces.len() + 1;
            let step = longest.length() / Rat::from_integer((parts as i64).into());
            let targets = (1..parts).map(|i| &step * Rat::from_integer((i as i64).into())).collect();
            plan.cuts.push(PieceCut { piece: longest.id, targets });
            plan.by_length = true;
        }
        return Ok(plan);
    }
    let l = stick_division(&values, k)?;
    for (p, v) in pieces.iter().zip(&values) {
        if *v > l {
            let marks = ceil_ratio(v, &l) - 1;
            let targets = (1..=marks)
                .map(|i| &l * Rat::from_integer((i as i64).into()))
                .collect();
            plan.cuts.push(PieceCut { piece: p.id, targets });
        }
    }
    plan.l_star = l;
    Ok(plan)
}

/// Answer to `Equalize*(k)`: the best `k-1` pieces are trimmed down to the
/// value of the `k`-th best. Ties are ranked by piece id.
pub fn plan_equalize_star(
    agent: AgentId,
    measure: &ValueMeasure,
    pieces: &[Piece],
    k: usize,
) -> Result<CutPlan, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroK);
    }
    if k > pieces.len() {
        return Err(QueryError::KExceedsPieces { k, pieces: pieces.len() });
    }
    let mut ranked: Vec<(Rat, PieceId)> = pieces.iter().map(|p| (measure.eval(p), p.id)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let target = ranked[k - 1].0.clone();
    let cuts = ranked[..k - 1]
        .iter()
        .filter(|(v, _)| *v > target)
        .map(|(_, id)| PieceCut { piece: *id, targets: vec![target.clone()] })
        .collect();
    Ok(CutPlan {
        agent,
        kind: QueryKind::EqualizeStar,
        k,
        l_star: target,
        cuts,
        by_length: false,
        produced: Vec::new(),
    })
}

/// Per-agent query counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryCounts {
    pub eval: u64,
    pub mark: u64,
    pub equalize: u64,
    pub equalize_star: u64,
}

impl QueryCounts {
    pub fn primitive(&self) -> u64 {
        self.eval + self.mark
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLog {
    per_agent: Vec<QueryCounts>,
}

impl QueryLog {
    pub fn new(agents: usize) -> Self {
        QueryLog { per_agent: vec![QueryCounts::default(); agents] }
    }

    fn slot(&mut self, agent: AgentId) -> &mut QueryCounts {
        if agent >= self.per_agent.len() {
            self.per_agent.resize(agent + 1, QueryCounts::default());
        }
        &mut self.per_agent[agent]
    }

    pub fn record_eval(&mut self, agent: AgentId, count: u64) {
        self.slot(agent).eval += count;
    }

    pub fn record_mark(&mut self, agent: AgentId, count: u64) {
        self.slot(agent).mark += count;
    }

    /// Charges a full query: one eval per piece on the table plus its marks.
    pub fn record_plan(&mut self, plan: &CutPlan, pieces_on_table: usize) {
        let slot = self.slot(plan.agent);
        slot.eval += pieces_on_table as u64;
        slot.mark += plan.cut_count() as u64;
        match plan.kind {
            QueryKind::Equalize => slot.equalize += 1,
            QueryKind::EqualizeStar => slot.equalize_star += 1,
        }
    }

    pub fn agent(&self, agent: AgentId) -> QueryCounts {
        self.per_agent.get(agent).cloned().unwrap_or_default()
    }

    pub fn agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn total(&self) -> QueryCounts {
        self.per_agent.iter().fold(QueryCounts::default(), |mut acc, c| {
            acc.eval += c.eval;
            acc.mark += c.mark;
            acc.equalize += c.equalize;
            acc.equalize_star += c.equalize_star;
            acc
        })
    }

    pub fn merge(&mut self, other: &QueryLog) {
        for (a, c) in other.per_agent.iter().enumerate() {
            let slot = self.slot(a);
            slot.eval += c.eval;
            slot.mark += c.mark;
            slot.equalize += c.equalize;
            slot.equalize_star += c.equalize_star;
        }
    }
}

impl fmt::Display for CutPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) l*={} cuts={}", self.kind, self.k, fmt_rat(&self.l_star), self.cut_count())
    }
}

/// True when `l` is a feasible stick length and no longer length is.
/// Exposed for oracle tests.
pub fn is_optimal_stick_length(lengths: &[Rat], k: usize, l: &Rat) -> bool {
    if stick_count(lengths, l) < k {
        return false;
    }
    // Feasibility only changes at lengths v/i, so probing just above l and
    // each larger breakpoint is exhaustive.
    let mut above: Vec<Rat> = lengths
        .iter()
        .filter(|v| !v.is_zero())
        .flat_map(|v| (1..=k).map(move |i| v / Rat::from_integer((i as i64).into())))
        .filter(|c| c > l)
        .collect();
    above.sort();
    above.dedup();
    let mut probes = Vec::new();
    let mut prev = l.clone();
    for c in &above {
        probes.push((&prev + c) / Rat::from_integer(2.into()));
        probes.push(c.clone());
        prev = c.clone();
    }
    probes.push(&prev + Rat::one());
    probes.iter().all(|p| stick_count(lengths, p) < k)
}
