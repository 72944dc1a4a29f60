//! Envy-free division of the entire cake for up to four agents.
//!
//! Repeated VIP rounds with `Equalize*` leave trimmings on the table and
//! build a domination graph; once the graph is solvable the remainder is
//! handed out by a separation or a cut-and-pick sequence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::allocation::Allocation;
use crate::connected::{engine_order, four_agent_round, middle_agents};
use crate::error::DivisionError;
use crate::lnbound::ceil_ln_ratio;
use crate::measure::{union_intervals, AgentId, Interval, PieceId, Rat, ValueMeasure};
use crate::prefgraph::{max_matching_in_order, PreferenceGraph};
use crate::queries::{QueryKind, QueryLog};
use crate::table::Table;

/// Single-letter name used in event lines.
pub fn agent_letter(a: AgentId) -> char {
    (b'A' + a as u8) as char
}

/// Directed domination edges. A label `k` means the source `k`-dominates
/// the target; `1` is full domination.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DominationGraph {
    pub n: usize,
    pub labels: BTreeMap<(AgentId, AgentId), usize>,
}

impl DominationGraph {
    pub fn new(n: usize) -> Self {
        DominationGraph { n, labels: BTreeMap::new() }
    }

    /// Graph with the given full-domination edges.
    pub fn from_full(n: usize, edges: &[(AgentId, AgentId)]) -> Self {
        DominationGraph { n, labels: edges.iter().map(|&e| (e, 1)).collect() }
    }

    pub fn label(&self, a: AgentId, b: AgentId) -> Option<usize> {
        self.labels.get(&(a, b)).copied()
    }

    pub fn fully(&self, a: AgentId, b: AgentId) -> bool {
        self.label(a, b) == Some(1)
    }

    /// Targets `a` dominates with a label of at most `n - 1`.
    pub fn out_edges(&self, a: AgentId) -> Vec<AgentId> {
        self.labels.keys().filter(|(s, _)| *s == a).map(|&(_, t)| t).collect()
    }

    pub fn full_out_degree(&self, a: AgentId) -> usize {
        (0..self.n).filter(|&b| b != a && self.fully(a, b)).count()
    }
}

impl fmt::Display for DominationGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .map(|(&(a, b), &k)| {
                if k == 1 {
                    format!("{}->{}", agent_letter(a), agent_letter(b))
                } else {
                    format!("{}->{}(k={k})", agent_letter(a), agent_letter(b))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The blocker would rather have the significant piece than its second
/// choice by `delta_v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompetitionRecord {
    pub blocker: AgentId,
    pub competitor: AgentId,
    pub delta_v: Rat,
    pub round: usize,
    pub best: Vec<Interval>,
    pub second: Vec<Interval>,
}

/// How the remaining cake is finished once the graph is solvable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolutionPlan {
    /// Nothing of value is left.
    Done,
    /// `outer` dominates every agent of `inner`; `inner` shares the rest.
    Separation { inner: Vec<AgentId>, outer: Vec<AgentId> },
    /// `cutter` cuts `n` equal parts; agents pick in reverse `order`, the
    /// cutter last. Each agent of `order` dominates those after it.
    Sequence { cutter: AgentId, order: Vec<AgentId> },
}

impl fmt::Display for SolutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters = |v: &[AgentId]| v.iter().map(|&a| agent_letter(a)).collect::<String>();
        match self {
            SolutionPlan::Done => write!(f, "done"),
            SolutionPlan::Separation { inner, outer } => {
                write!(f, "separation: {} share, {} dominate", letters(inner), letters(outer))
            }
            SolutionPlan::Sequence { cutter, order } => {
                write!(f, "sequence {} with cutter {}", letters(order), agent_letter(*cutter))
            }
        }
    }
}

/// Does `plan` follow from the full-domination edges of `g`?
pub fn plan_is_valid(g: &DominationGraph, plan: &SolutionPlan) -> bool {
    match plan {
        SolutionPlan::Done => true,
        SolutionPlan::Separation { inner, outer } => {
            !inner.is_empty()
                && !outer.is_empty()
                && inner.len() + outer.len() == g.n
                && outer.iter().all(|&a| inner.iter().all(|&b| g.fully(a, b)))
        }
        SolutionPlan::Sequence { cutter, order } => {
            order.len() + 1 == g.n
                && !order.contains(cutter)
                && order
                    .iter()
                    .enumerate()
                    .all(|(i, &a)| order[i + 1..].iter().all(|&b| g.fully(a, b)))
        }
    }
}

/// Separation with the smallest sharing group, then any sequence.
pub fn brute_force_plan(g: &DominationGraph) -> Option<SolutionPlan> {
    let n = g.n;
    let mut masks: Vec<u32> = (1..(1u32 << n) - 1).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let inner: Vec<AgentId> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
        let outer: Vec<AgentId> = (0..n).filter(|a| mask >> a & 1 == 0).collect();
        let plan = SolutionPlan::Separation { inner, outer };
        if plan_is_valid(g, &plan) {
            return Some(plan);
        }
    }
    for cutter in 0..n {
        let rest: Vec<AgentId> = (0..n).filter(|&a| a != cutter).collect();
        for order in permutations(&rest) {
            let plan = SolutionPlan::Sequence { cutter, order };
            if plan_is_valid(g, &plan) {
                return Some(plan);
            }
        }
    }
    None
}

fn permutations(items: &[AgentId]) -> Vec<Vec<AgentId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// The `n-1` agents that each fully dominate `n-2` others, if there are.
fn strong_set(g: &DominationGraph) -> Option<(AgentId, Vec<AgentId>)> {
    let n = g.n;
    if n < 2 {
        return None;
    }
    let rich: Vec<AgentId> = (0..n).filter(|&a| g.full_out_degree(a) >= n - 2).collect();
    if rich.len() < n - 1 {
        return None;
    }
    let set: Vec<AgentId> = rich[..n - 1].to_vec();
    let outsider = (0..n).find(|a| !set.contains(a))?;
    Some((outsider, set))
}

/// Case analysis for `n-1` agents each dominating `n-2` others: grow the
/// sharing group while someone in the rest fails to dominate it.
pub fn resolve_strong_set(g: &DominationGraph, outsider: AgentId, set: &[AgentId]) -> Option<SolutionPlan> {
    let mut inner = vec![outsider];
    let mut rest: Vec<AgentId> = set.to_vec();
    let mut order = Vec::new();
    while !rest.is_empty() {
        if rest.iter().all(|&a| inner.iter().all(|&b| g.fully(a, b))) {
            let mut inner = inner.clone();
            inner.sort();
            let mut outer = rest.clone();
            outer.sort();
            return Some(SolutionPlan::Separation { inner, outer });
        }
        let pos = rest.iter().position(|&a| inner.iter().any(|&b| !g.fully(a, b)))?;
        let x = rest.remove(pos);
        if !rest.iter().all(|&b| g.fully(x, b)) {
            return None;
        }
        order.push(x);
        inner.push(x);
    }
    Some(SolutionPlan::Sequence { cutter: outsider, order })
}

/// A plan for `g`, or none if the graph is not yet solvable.
pub fn solvable(g: &DominationGraph) -> Option<SolutionPlan> {
    if let Some((outsider, set)) = strong_set(g) {
        if let Some(plan) = resolve_strong_set(g, outsider, &set) {
            return Some(plan);
        }
    }
    brute_force_plan(g)
}

/// Pieces handed out in one round, with every agent's value of each.
#[derive(Debug, Clone)]
struct Assignment {
    bundles: Vec<Vec<Interval>>,
    values: Vec<Vec<Rat>>,
}

impl Assignment {
    fn new(measures: &[ValueMeasure], bundles: Vec<Vec<Interval>>) -> Self {
        let values = measures
            .iter()
            .map(|m| bundles.iter().map(|b| m.eval_intervals(b)).collect())
            .collect();
        Assignment { bundles, values }
    }
}

#[derive(Debug, Clone)]
struct RoundRecord {
    primary: Assignment,
    alternative: Option<Assignment>,
    use_alternative: bool,
}

impl RoundRecord {
    fn chosen(&self) -> &Assignment {
        match (&self.alternative, self.use_alternative) {
            (Some(alt), true) => alt,
            _ => &self.primary,
        }
    }
}

/// What one VIP round produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub round: usize,
    pub trims: usize,
    /// Agent holding the piece whose trimmings the VIP values most.
    pub significant_taker: Option<AgentId>,
    /// Set when the designated last agent wanted the significant piece
    /// alone and could have been given its second choice instead.
    pub competition: Option<CompetitionRecord>,
    pub new_edges: Vec<(AgentId, AgentId, usize)>,
}

/// Cumulative allocation across rounds, the remainder, and the graph.
#[derive(Debug, Clone)]
pub struct EntireState {
    measures: Vec<ValueMeasure>,
    rounds: Vec<RoundRecord>,
    remainder: Vec<Interval>,
    pub log: QueryLog,
    pub pieces: usize,
    pub events: Vec<String>,
    pub competitions: Vec<CompetitionRecord>,
    /// Graph after every refresh.
    pub history: Vec<DominationGraph>,
    graph: DominationGraph,
    /// Holder of the trimmed piece after the first round.
    first_taker: Option<AgentId>,
}

impl EntireState {
    pub fn new(cake: Vec<Interval>, measures: &[ValueMeasure]) -> Self {
        let n = measures.len();
        EntireState {
            measures: measures.to_vec(),
            rounds: Vec::new(),
            remainder: cake,
            log: QueryLog::new(n),
            pieces: 0,
            events: Vec::new(),
            competitions: Vec::new(),
            history: Vec::new(),
            graph: DominationGraph::new(n),
            first_taker: None,
        }
    }

    pub fn n(&self) -> usize {
        self.measures.len()
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn remainder(&self) -> &[Interval] {
        &self.remainder
    }

    pub fn graph(&self) -> &DominationGraph {
        &self.graph
    }

    pub fn remainder_value(&self, a: AgentId) -> Rat {
        self.measures[a].eval_intervals(&self.remainder)
    }

    /// `V_a(X_a) - V_a(X_b)` over everything handed out so far.
    pub fn gap(&self, a: AgentId, b: AgentId) -> Rat {
        self.rounds.iter().fold(Rat::zero(), |acc, r| {
            let v = &r.chosen().values;
            acc + &v[a][a] - &v[a][b]
        })
    }

    /// `a` would not envy `b` even if `b` also received `1/k` of the
    /// remainder's value.
    pub fn k_dominates(&self, a: AgentId, b: AgentId, k: usize) -> bool {
        self.gap(a, b) * Rat::from_integer(BigInt::from(k)) >= self.remainder_value(a)
    }

    pub fn dominates(&self, a: AgentId, b: AgentId) -> bool {
        self.k_dominates(a, b, 1)
    }

    /// Smallest `k < n` with `a` `k`-dominating `b`.
    fn label(&self, a: AgentId, b: AgentId) -> Option<usize> {
        let n = self.n();
        let rem = self.remainder_value(a);
        if rem.is_zero() {
            return Some(1);
        }
        let gap = self.gap(a, b);
        if gap <= Rat::zero() {
            return None;
        }
        let k = (rem / gap).ceil().to_integer().to_usize()?.max(1);
        (k < n).then_some(k)
    }

    /// Recomputes all labels; returns edges that are new or improved.
    fn refresh_graph(&mut self) -> Vec<(AgentId, AgentId, usize)> {
        let n = self.n();
        let mut next = DominationGraph::new(n);
        let mut changed = Vec::new();
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                if let Some(k) = self.label(a, b) {
                    next.labels.insert((a, b), k);
                    if self.graph.label(a, b).is_none_or(|old| k < old) {
                        changed.push((a, b, k));
                    }
                }
            }
        }
        self.graph = next;
        self.history.push(self.graph.clone());
        changed
    }

    pub fn bundles(&self) -> Vec<Vec<Interval>> {
        let mut out = vec![Vec::new(); self.n()];
        for r in &self.rounds {
            for (acc, b) in out.iter_mut().zip(&r.chosen().bundles) {
                *acc = union_intervals(acc, b);
            }
        }
        out
    }

    fn nothing_left(&self) -> bool {
        (0..self.n()).all(|a| self.remainder_value(a).is_zero())
    }

    /// One envy-free round on the remainder with `vip` cutting `n` equal
    /// pieces and the others trimming with `Equalize*`.
    pub fn run_efvip_star(&mut self, vip: AgentId, last: Option<AgentId>) -> Result<RoundOutcome, DivisionError> {
        let n = self.n();
        let ms = self.measures.clone();
        let mut table = Table::new(n, self.remainder.clone());
        table.equalize(vip, &ms, n)?;
        let (table, last, order) = match n {
            2 => {
                let other = 1 - vip;
                (table, other, vec![other, vip])
            }
            3 => {
                let others: Vec<AgentId> = (0..3).filter(|&a| a != vip).collect();
                let last = last.unwrap_or(others[1]);
                let b = others.iter().copied().find(|&a| a != last).expect("two other agents");
                table.equalize_star(b, &ms, 2)?;
                (table, last, vec![last, b, vip])
            }
            4 => {
                let (b, c, last) = middle_agents(4, vip, last)?;
                let round = four_agent_round(&table, &ms, b, c, last, true)?;
                (round.table, last, engine_order(4, b, c, last))
            }
            _ => return Err(DivisionError::Unsupported(format!("{n} agents in a VIP round"))),
        };
        self.finish_round(table, vip, last, &order)
    }

    fn finish_round(
        &mut self,
        mut table: Table,
        vip: AgentId,
        last: AgentId,
        order: &[AgentId],
    ) -> Result<RoundOutcome, DivisionError> {
        let ms = self.measures.clone();
        let graph = table.true_graph(&ms);
        let mut trimmings: BTreeMap<PieceId, Vec<Interval>> = BTreeMap::new();
        for p in table.reserve() {
            let e = trimmings.entry(p.origin).or_default();
            *e = union_intervals(e, &p.intervals);
        }
        let trims = trimmings.len();
        let significant: Option<PieceId> = trimmings
            .iter()
            .map(|(o, ivs)| (ms[vip].eval_intervals(ivs), *o))
            .max_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)))
            .map(|(_, origin)| {
                table
                    .pieces()
                    .iter()
                    .find(|p| p.origin == origin)
                    .map(|p| p.id)
                    .expect("trimmed piece stays on the table")
            });
        let best_last = &graph.edges[last];
        let mut competition = None;
        let (primary, alternative) = match significant {
            None => (matching(&graph, order, None)?, None),
            Some(s) if !best_last.contains(&s) => (matching(&graph, order, None)?, None),
            Some(s) if easy_pin(&graph, order, last, s).is_some() => {
                (easy_pin(&graph, order, last, s).expect("checked"), None)
            }
            Some(s) => {
                let primary = matching(&graph, order, Some((last, s)))?;
                let second = table
                    .pieces()
                    .iter()
                    .filter(|p| p.id != s)
                    .map(|p| (ms[last].eval(p), p.id))
                    .max_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)))
                    .map(|(_, id)| id);
                let alt = second.and_then(|p2| matching(&graph, order, Some((last, p2))).ok().map(|m| (p2, m)));
                if let Some((p2, alt)) = &alt {
                    let competitor = alt.iter().position(|&p| p == s).expect("all pieces taken");
                    let dv = ms[last].eval_intervals(&table.intervals_of(s)) - ms[last].eval_intervals(&table.intervals_of(*p2));
                    competition = Some(CompetitionRecord {
                        blocker: last,
                        competitor,
                        delta_v: dv,
                        round: self.rounds.len(),
                        best: table.intervals_of(s),
                        second: table.intervals_of(*p2),
                    });
                }
                (primary, alt.map(|(_, m)| m))
            }
        };
        let to_bundles = |assigned: &[PieceId]| assigned.iter().map(|&id| table.intervals_of(id)).collect::<Vec<_>>();
        let record = RoundRecord {
            primary: Assignment::new(&ms, to_bundles(&primary)),
            alternative: alternative.as_ref().map(|a| Assignment::new(&ms, to_bundles(a))),
            use_alternative: false,
        };
        let taker = significant.and_then(|s| primary.iter().position(|&p| p == s));
        self.remainder = table.leftover_intervals(&primary);
        self.log.merge(&table.log);
        self.pieces += n_pieces(&table);
        self.rounds.push(record);
        if self.rounds.len() == 1 {
            self.first_taker = taker;
        }
        let new_edges = self.refresh_graph();
        let queries: Vec<String> = table
            .events
            .iter()
            .map(|e| {
                let star = if e.kind == QueryKind::EqualizeStar { "*" } else { "" };
                format!("{}:Equalize{star}({}) cuts={}", agent_letter(e.agent), e.k, e.cuts)
            })
            .collect();
        let takers: String = primary
            .iter()
            .enumerate()
            .map(|(a, p)| format!("{}{}", agent_letter(a), p))
            .collect::<Vec<_>>()
            .join(" ");
        self.events.push(format!(
            "round {}: vip {} last {}; {}; trims {}; takers {}; significant {}; new edges {}",
            self.rounds.len(),
            agent_letter(vip),
            agent_letter(last),
            queries.join(", "),
            trims,
            takers,
            taker.map(|t| agent_letter(t).to_string()).unwrap_or_else(|| "-".into()),
            fmt_edges(&new_edges),
        ));
        Ok(RoundOutcome {
            round: self.rounds.len() - 1,
            trims,
            significant_taker: taker,
            competition,
            new_edges,
        })
    }
}

fn n_pieces(table: &Table) -> usize {
    table.pieces().len() + table.reserve().len()
}

fn fmt_edges(edges: &[(AgentId, AgentId, usize)]) -> String {
    if edges.is_empty() {
        return "-".into();
    }
    edges
        .iter()
        .map(|&(a, b, k)| {
            if k == 1 {
                format!("{}->{}", agent_letter(a), agent_letter(b))
            } else {
                format!("{}->{}(k={k})", agent_letter(a), agent_letter(b))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Saturating matching on the unreduced graph, optionally with one agent
/// pinned to one piece.
/// Matching that gives `last` one of its best pieces other than `s`.
fn easy_pin(g: &PreferenceGraph, order: &[AgentId], last: AgentId, s: PieceId) -> Option<Vec<PieceId>> {
    g.edges[last]
        .iter()
        .filter(|&&p| p != s)
        .find_map(|&p| matching(g, order, Some((last, p))).ok())
}

fn matching(
    g: &PreferenceGraph,
    order: &[AgentId],
    pin: Option<(AgentId, PieceId)>,
) -> Result<Vec<PieceId>, DivisionError> {
    let mut g = g.clone();
    if let Some((agent, piece)) = pin {
        for (a, e) in g.edges.iter_mut().enumerate() {
            if a == agent {
                *e = BTreeSet::from([piece]);
            } else {
                e.remove(&piece);
            }
        }
    }
    max_matching_in_order(&g, order)
        .map(|m| m.assigned)
        .map_err(|e| DivisionError::Contradiction(format!("round has no envy-free matching: {e}")))
}

impl EntireState {
    /// Extra rounds with `a` as VIP until `a` fully dominates `b`, at most
    /// `ceil(ln k / ln(n/(n-1)))` of them for a `k`-domination edge.
    pub fn promote_k_domination(&mut self, a: AgentId, b: AgentId) -> Result<usize, DivisionError> {
        let n = self.n();
        let k = self.graph.label(a, b).ok_or_else(|| {
            DivisionError::InvalidInput(format!("{} does not dominate {}", agent_letter(a), agent_letter(b)))
        })?;
        let limit = promotion_rounds(n, k);
        let mut used = 0;
        while used < limit && !self.dominates(a, b) {
            self.run_efvip_star(a, None)?;
            used += 1;
        }
        if !self.dominates(a, b) {
            return Err(DivisionError::Contradiction(format!(
                "{} still short of dominating {} after {used} rounds",
                agent_letter(a),
                agent_letter(b)
            )));
        }
        Ok(used)
    }

    /// Rounds with `vip` and its first dominated agent kept last, until
    /// `vip` dominates a second agent. A repeated competitor is settled by
    /// moving the blocker to its second choice in the round with the
    /// smaller gap.
    pub fn acquire_two_edges(&mut self, vip: AgentId) -> Result<usize, DivisionError> {
        let n = self.n();
        let want = 2.min(n - 1);
        let blocker = *self
            .graph
            .out_edges(vip)
            .first()
            .ok_or_else(|| DivisionError::InvalidInput(format!("{} dominates nobody yet", agent_letter(vip))))?;
        let mut used = 0;
        while self.graph.out_edges(vip).len() < want {
            if used >= n {
                return Err(DivisionError::Contradiction(format!(
                    "{} gained no second domination edge within {n} rounds",
                    agent_letter(vip)
                )));
            }
            let out = self.run_efvip_star(vip, Some(blocker))?;
            used += 1;
            let Some(rec) = out.competition else { continue };
            let earlier = self
                .competitions
                .iter()
                .find(|c| c.blocker == rec.blocker && c.competitor == rec.competitor)
                .cloned();
            self.competitions.push(rec.clone());
            if let Some(prev) = earlier {
                let (first, then) = if prev.delta_v > rec.delta_v {
                    (rec.round, prev.round)
                } else {
                    (prev.round, rec.round)
                };
                match [first, then].into_iter().find(|&r| self.try_switch(r)) {
                    Some(moved) => {
                        let changed = self.refresh_graph();
                        self.events.push(format!(
                            "{} competes with {} again; round {} gives {} its second choice; new edges {}",
                            agent_letter(rec.blocker),
                            agent_letter(rec.competitor),
                            moved + 1,
                            agent_letter(rec.blocker),
                            fmt_edges(&changed)
                        ));
                    }
                    None => self.events.push(format!(
                        "{} competes with {} again; no switch keeps the graph",
                        agent_letter(rec.blocker),
                        agent_letter(rec.competitor)
                    )),
                }
            }
        }
        Ok(used)
    }

    /// Switches `round` to its alternative if the cumulative state stays
    /// envy-free and no domination label gets worse; otherwise leaves it.
    fn try_switch(&mut self, round: usize) -> bool {
        if self.rounds[round].use_alternative || self.rounds[round].alternative.is_none() {
            return false;
        }
        self.rounds[round].use_alternative = true;
        let n = self.n();
        let envy_free = (0..n).all(|a| (0..n).all(|b| a == b || self.gap(a, b) >= Rat::zero()));
        let kept = self
            .graph
            .labels
            .iter()
            .all(|(&(a, b), &k)| self.label(a, b).is_some_and(|now| now <= k));
        if !(envy_free && kept) {
            self.rounds[round].use_alternative = false;
        }
        envy_free && kept
    }

    /// Three agents after one round: the holder of the trimmed piece picks
    /// first, the VIP second, and the remaining agent cuts the trimmings.
    fn three_agent_plan(&self) -> Option<SolutionPlan> {
        let holder = self.first_taker.filter(|&h| self.n() == 3 && self.rounds.len() == 1 && h != 0)?;
        let cutter = (1..3).find(|&a| a != holder)?;
        let plan = SolutionPlan::Sequence { cutter, order: vec![0, holder] };
        plan_is_valid(&self.graph, &plan).then_some(plan)
    }

    fn plan(&self) -> Option<SolutionPlan> {
        if self.nothing_left() {
            return Some(SolutionPlan::Done);
        }
        if let Some(plan) = self.three_agent_plan() {
            return Some(plan);
        }
        solvable(&self.graph)
    }
}

/// `ceil(ln k / ln(n/(n-1)))`, the rounds that turn `k`-domination into
/// full domination.
pub fn promotion_rounds(n: usize, k: usize) -> usize {
    if k <= 1 {
        return 0;
    }
    let base = Rat::new(BigInt::from(n), BigInt::from(n - 1));
    ceil_ln_ratio(&Rat::from_integer(BigInt::from(k)), &base)
        .to_usize()
        .expect("small round count")
}

/// Upper bound on VIP rounds before the graph becomes solvable: `n-1`
/// VIPs with one opening round and up to `n` follow-ups each, then
/// promotion of every VIP's edges.
pub fn entire_round_bound(n: usize) -> usize {
    match n {
        0..=2 => 0,
        3 => 2,
        _ => (n - 1) * (1 + n) + (n - 1) * promotion_rounds(n, n - 1),
    }
}

/// Full outcome of an entire-cake division.
#[derive(Debug, Clone)]
pub struct EntireOutcome {
    pub allocation: Allocation,
    pub graph: DominationGraph,
    pub plan: SolutionPlan,
    pub rounds: usize,
    pub competitions: Vec<CompetitionRecord>,
    pub history: Vec<DominationGraph>,
    pub events: Vec<String>,
}

/// Envy-free division of the whole cake among at most four agents.
pub fn divide_entire(measures: &[ValueMeasure]) -> Result<Allocation, DivisionError> {
    Ok(divide_entire_traced(vec![Interval::unit()], measures)?.allocation)
}

pub fn divide_entire_traced(cake: Vec<Interval>, measures: &[ValueMeasure]) -> Result<EntireOutcome, DivisionError> {
    let n = measures.len();
    if n == 0 {
        return Err(DivisionError::InvalidInput("no agents".into()));
    }
    if n > 4 {
        return Err(DivisionError::Unsupported(format!(
            "entire-cake division is implemented for at most 4 agents, found {n}"
        )));
    }
    let mut state = EntireState::new(cake, measures);
    if n >= 3 {
        build_solvable_graph(&mut state)?;
    }
    let plan = if state.nothing_left() {
        SolutionPlan::Done
    } else if n >= 3 {
        state.plan().expect("loop ends with a plan")
    } else if n == 1 {
        SolutionPlan::Separation { inner: vec![0], outer: vec![] }
    } else {
        SolutionPlan::Sequence { cutter: 0, order: vec![1] }
    };
    state.events.push(format!("plan: {plan}"));
    let (bundles, remainder) = execute_plan(&mut state, &plan)?;
    let mut allocation = Allocation::new(measures, bundles, remainder, state.log.clone(), state.pieces);
    allocation.notes = state.events.clone();
    if !allocation.is_envy_free() {
        return Err(DivisionError::Contradiction("entire-cake allocation is not envy-free".into()));
    }
    if allocation.remainder_values(measures).iter().any(|v| !v.is_zero()) {
        return Err(DivisionError::Contradiction("valuable cake left over".into()));
    }
    Ok(EntireOutcome {
        allocation,
        graph: state.graph.clone(),
        plan,
        rounds: state.rounds(),
        competitions: state.competitions.clone(),
        history: state.history.clone(),
        events: state.events,
    })
}

/// VIP rounds until the domination graph has a plan.
fn build_solvable_graph(state: &mut EntireState) -> Result<(), DivisionError> {
    let n = state.n();
    let cap = 3 * entire_round_bound(n).max(1);
    let vips: Vec<AgentId> = (0..n - 1).collect();
    while state.plan().is_none() {
        if state.rounds() > cap {
            return Err(DivisionError::Contradiction(format!(
                "domination graph not solvable after {} rounds",
                state.rounds()
            )));
        }
        for &vip in &vips {
            if state.plan().is_some() {
                return Ok(());
            }
            if state.graph.out_edges(vip).is_empty() {
                state.run_efvip_star(vip, None)?;
            }
            if state.plan().is_some() {
                return Ok(());
            }
            if n >= 4 && !state.graph.out_edges(vip).is_empty() {
                state.acquire_two_edges(vip)?;
            }
        }
        for &vip in &vips {
            for b in state.graph.out_edges(vip) {
                if state.plan().is_some() {
                    return Ok(());
                }
                if state.graph.label(vip, b).is_some_and(|k| k > 1) {
                    state.promote_k_domination(vip, b)?;
                }
            }
        }
    }
    Ok(())
}

/// Hands out the remainder according to `plan`; returns final bundles and
/// whatever is left.
fn execute_plan(
    state: &mut EntireState,
    plan: &SolutionPlan,
) -> Result<(Vec<Vec<Interval>>, Vec<Interval>), DivisionError> {
    let mut bundles = state.bundles();
    let ms = state.measures.clone();
    let n = ms.len();
    match plan {
        SolutionPlan::Done => Ok((bundles, state.remainder.clone())),
        SolutionPlan::Separation { inner, .. } if inner.len() == 1 => {
            let a = inner[0];
            bundles[a] = union_intervals(&bundles[a], &state.remainder);
            state.events.push(format!("{} takes the rest", agent_letter(a)));
            Ok((bundles, Vec::new()))
        }
        SolutionPlan::Separation { inner, .. } => {
            let sub: Vec<ValueMeasure> = inner.iter().map(|&a| ms[a].clone()).collect();
            let out = divide_entire_traced(state.remainder.clone(), &sub)?;
            let names: String = inner.iter().map(|&a| agent_letter(a)).collect();
            for (i, &a) in inner.iter().enumerate() {
                bundles[a] = union_intervals(&bundles[a], &out.allocation.bundles[i]);
                let counts = out.allocation.log.agent(i);
                state.log.record_eval(a, counts.eval);
                state.log.record_mark(a, counts.mark);
            }
            state.pieces += out.allocation.piece_count;
            for line in &out.events {
                state.events.push(format!("[{names}] {line}"));
            }
            Ok((bundles, out.allocation.remainder))
        }
        SolutionPlan::Sequence { cutter, order } => {
            let mut table = Table::new(n, state.remainder.clone());
            table.equalize(*cutter, &ms, n)?;
            let mut free: Vec<PieceId> = table.pieces().iter().map(|p| p.id).collect();
            let mut picks = String::new();
            for &a in order.iter().rev().chain(std::iter::once(cutter)) {
                let (pos, _) = free
                    .iter()
                    .enumerate()
                    .map(|(i, &id)| (i, ms[a].eval_intervals(&table.intervals_of(id))))
                    .max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)))
                    .expect("one piece per agent");
                table.log.record_eval(a, free.len() as u64);
                let id = free.remove(pos);
                bundles[a] = union_intervals(&bundles[a], &table.intervals_of(id));
                picks.push(agent_letter(a));
            }
            state.log.merge(&table.log);
            state.pieces += n_pieces(&table);
            state.events.push(format!("{} cuts {n} equal parts; picks {picks}", agent_letter(*cutter)));
            Ok((bundles, Vec::new()))
        }
    }
}
