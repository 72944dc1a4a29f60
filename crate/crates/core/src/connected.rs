//! Connected-piece division: the successive-Equalize algorithm for any
//! number of agents, its improved variant, and the branch-trying
//! algorithms for three and four agents.

pub use crate::allocation::Allocation;
use crate::error::DivisionError;
use crate::measure::{int, AgentId, Interval, Rat, ValueMeasure};
use crate::prefgraph::{max_matching_in_order, Finalized};
use crate::queries::QueryLog;
use crate::table::Table;

/// Note attached when the allocation comes from the unreduced graph.
pub const REVEALED: &str = "matched on revealed preferences";

/// One scripted query: `agent` answers `Equalize(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub agent: AgentId,
    pub k: usize,
}

/// Queries tried speculatively, in order.
pub type BranchScript = Vec<Step>;

/// Renders a script as `a:Equalize(k); b:Equalize(k)` using `names`.
pub fn script_label(script: &[Step], names: &[String]) -> String {
    script
        .iter()
        .map(|s| {
            let name = names.get(s.agent).cloned().unwrap_or_else(|| s.agent.to_string());
            format!("{name}:Equalize({})", s.k)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn step(agent: AgentId, k: usize) -> Step {
    Step { agent, k }
}

/// The nine scripts for three agents, in trial order.
pub fn three_agent_branches() -> Vec<BranchScript> {
    let mut out = Vec::new();
    for cutter in 0..3 {
        out.push(vec![step(cutter, 3)]);
        for other in (0..3).filter(|&o| o != cutter) {
            out.push(vec![step(cutter, 3), step(other, 2)]);
        }
    }
    out
}

/// The four follow-up scripts of the four-agent algorithm for the two
/// middle agents `b` and `c`, in trial order.
pub fn four_agent_branches(b: AgentId, c: AgentId) -> Vec<BranchScript> {
    vec![
        vec![step(b, 2), step(c, 2)],
        vec![step(b, 3), step(c, 2)],
        vec![step(c, 2), step(b, 2)],
        vec![step(c, 3), step(b, 2)],
    ]
}

pub(crate) fn validate(measures: &[ValueMeasure], vip: AgentId, min_agents: usize) -> Result<(), DivisionError> {
    if measures.len() < min_agents {
        return Err(DivisionError::InvalidInput(format!(
            "need at least {min_agents} agents, found {}",
            measures.len()
        )));
    }
    if vip >= measures.len() {
        return Err(DivisionError::InvalidInput(format!("no agent with index {vip}")));
    }
    Ok(())
}

/// `vip` first, then everyone else by index.
pub(crate) fn vip_order(n: usize, vip: AgentId) -> Vec<AgentId> {
    std::iter::once(vip).chain((0..n).filter(|&a| a != vip)).collect()
}

pub(crate) fn finish(table: &Table, measures: &[ValueMeasure], fin: &Finalized) -> Allocation {
    let bundles = fin.assignment.iter().map(|&id| table.intervals_of(id)).collect();
    let remainder = table.leftover_intervals(&fin.assignment);
    let mut alloc = Allocation::new(measures, bundles, remainder, table.log.clone(), table.nominal_pieces());
    alloc.events = table.events.clone();
    alloc
}

/// Outcome of trying scripts on copies of a table.
pub(crate) struct BranchWin {
    pub index: usize,
    pub table: Table,
}

pub(crate) fn try_branches(
    base: &Table,
    measures: &[ValueMeasure],
    branches: &[BranchScript],
    star: bool,
    mut accept: impl FnMut(&mut Table) -> bool,
) -> Result<Option<BranchWin>, DivisionError> {
    let mut trial_log = QueryLog::new(measures.len());
    for (index, script) in branches.iter().enumerate() {
        let mut t = base.clone();
        t.log = QueryLog::new(measures.len());
        for s in script {
            if star {
                t.equalize_star(s.agent, measures, s.k)?;
            } else {
                t.equalize(s.agent, measures, s.k)?;
            }
        }
        if accept(&mut t) {
            let mut log = base.log.clone();
            log.merge(&trial_log);
            log.merge(&t.log);
            t.log = log;
            return Ok(Some(BranchWin { index, table: t }));
        }
        trial_log.merge(&t.log);
    }
    Ok(None)
}

/// Every agent outside `last` prefers at least two reduced-graph nodes, and
/// the reduced graph already admits a saturating matching.
pub(crate) fn two_edges_each(t: &mut Table, measures: &[ValueMeasure], last: AgentId) -> bool {
    let g = t.reduced_graph(measures);
    (0..measures.len()).all(|a| a == last || g.degree(a) >= 2)
        && max_matching_in_order(&g, &(0..measures.len()).collect::<Vec<_>>()).is_ok()
}

/// Successive Equalize: the agent that becomes known with `u` unknown
/// agents left creates `2^(u-1) + 1` equally-best pieces.
pub fn divide_n_connected(measures: &[ValueMeasure], vip: AgentId) -> Result<Allocation, DivisionError> {
    divide_n_connected_on(vec![Interval::unit()], measures, vip)
}

pub fn divide_n_connected_on(
    cake: Vec<Interval>,
    measures: &[ValueMeasure],
    vip: AgentId,
) -> Result<Allocation, DivisionError> {
    validate(measures, vip, 1)?;
    let n = measures.len();
    let order = vip_order(n, vip);
    let mut table = Table::new(n, cake);
    for u in (1..n).rev() {
        table.equalize(order[n - 1 - u], measures, (1usize << (u - 1)) + 1)?;
    }
    let reverse: Vec<AgentId> = order.iter().rev().copied().collect();
    let (fin, full) = match table.assign_reduced(measures, &reverse) {
        Ok(fin) => (fin, false),
        Err(_) => {
            let fin = table
                .assign_true(measures, &reverse)
                .map_err(|e| DivisionError::Contradiction(format!("known agents lack a matching: {e}")))?;
            (fin, true)
        }
    };
    let mut alloc = finish(&table, measures, &fin);
    if full {
        alloc.notes.push(REVEALED.into());
    }
    Ok(alloc)
}

/// Equalize sizes `1 + 3 * 2^(u-3)` down to three unknown agents, who then
/// run the four-agent branches.
pub fn divide_n_connected_improved(measures: &[ValueMeasure], vip: AgentId) -> Result<Allocation, DivisionError> {
    divide_n_connected_improved_on(vec![Interval::unit()], measures, vip)
}

pub fn divide_n_connected_improved_on(
    cake: Vec<Interval>,
    measures: &[ValueMeasure],
    vip: AgentId,
) -> Result<Allocation, DivisionError> {
    validate(measures, vip, 4)?;
    let n = measures.len();
    let order = vip_order(n, vip);
    let mut table = Table::new(n, cake);
    table.equalize(order[0], measures, 1 + 3 * (1usize << (n - 4)))?;
    for (i, &agent) in order.iter().enumerate().take(n - 3).skip(1) {
        table.equalize(agent, measures, 1 + 3 * (1usize << (n - 4 - i)))?;
    }
    let (b, c, last) = (order[n - 3], order[n - 2], order[n - 1]);
    run_four_agent_engine(table, measures, b, c, last, false)
}

/// A finished four-agent script run, not yet allocated.
pub(crate) struct FourRound {
    pub table: Table,
    pub index: usize,
    /// The structural criterion held; otherwise the branch only has a
    /// matching on the unreduced graph.
    pub structural: bool,
}

/// Runs the four scripts in order and keeps the first after which everyone
/// but `last` prefers two pieces; failing that, the first whose unreduced
/// graph has a saturating matching.
pub(crate) fn four_agent_round(
    table: &Table,
    measures: &[ValueMeasure],
    b: AgentId,
    c: AgentId,
    last: AgentId,
    star: bool,
) -> Result<FourRound, DivisionError> {
    let branches = four_agent_branches(b, c);
    let order = engine_order(measures.len(), b, c, last);
    let mut spent = QueryLog::new(measures.len());
    let mut fallback: Option<BranchWin> = None;
    let mut index = 0;
    let win = try_branches(table, measures, &branches, star, |t| {
        if two_edges_each(t, measures, last) {
            return true;
        }
        if fallback.is_none() {
            let mut probe = t.clone();
            if probe.assign_true(measures, &order).is_ok() {
                fallback = Some(BranchWin { index, table: probe });
            }
        }
        spent.merge(&t.log);
        index += 1;
        false
    })?;
    match win {
        Some(win) => Ok(FourRound { table: win.table, index: win.index, structural: true }),
        None => {
            let mut win = fallback.ok_or_else(|| {
                DivisionError::Contradiction("no four-agent branch admits an envy-free matching".into())
            })?;
            let mut log = table.log.clone();
            log.merge(&spent);
            win.table.log = log;
            Ok(FourRound { table: win.table, index: win.index, structural: false })
        }
    }
}

/// Matching order of the four-agent engine: the agent that never cuts
/// first, then the later cutter, then the earlier, then everyone else.
pub(crate) fn engine_order(n: usize, b: AgentId, c: AgentId, last: AgentId) -> Vec<AgentId> {
    let mut order: Vec<AgentId> = vec![last, c, b];
    order.extend((0..n).filter(|a| ![last, b, c].contains(a)));
    order
}

/// Applies the first acceptable four-agent branch, then allocates.
pub(crate) fn run_four_agent_engine(
    table: Table,
    measures: &[ValueMeasure],
    b: AgentId,
    c: AgentId,
    last: AgentId,
    star: bool,
) -> Result<Allocation, DivisionError> {
    let round = four_agent_round(&table, measures, b, c, last, star)?;
    let order = engine_order(measures.len(), b, c, last);
    let mut t = round.table;
    let fin = if round.structural {
        t.assign_reduced(measures, &order)
            .map_err(|e| DivisionError::Contradiction(format!("winning branch has no matching: {e}")))?
    } else {
        t.assign_true(measures, &order)?
    };
    let mut alloc = finish(&t, measures, &fin);
    alloc.notes.push(format!("branch {} of 4", round.index + 1));
    if !round.structural {
        alloc.notes.push(REVEALED.into());
    }
    Ok(alloc)
}

/// Three agents, every value at least a third: the first of nine scripts
/// whose outcome is envy-free and proportional.
pub fn divide_3_connected(measures: &[ValueMeasure]) -> Result<Allocation, DivisionError> {
    divide_3_connected_on(vec![Interval::unit()], measures)
}

pub fn divide_3_connected_on(cake: Vec<Interval>, measures: &[ValueMeasure]) -> Result<Allocation, DivisionError> {
    if measures.len() != 3 {
        return Err(DivisionError::InvalidInput(format!(
            "three-agent division needs 3 agents, found {}",
            measures.len()
        )));
    }
    let shares: Vec<Rat> = measures.iter().map(|m| m.eval_intervals(&cake) / int(3)).collect();
    let base = Table::new(3, cake);
    let branches = three_agent_branches();
    let win = try_branches(&base, measures, &branches, false, |t| {
        let best = t.best_values(measures);
        best.iter().zip(&shares).all(|(b, s)| b >= s) && t.assign_true(measures, &[2, 1, 0]).is_ok()
    })?
    .ok_or_else(|| DivisionError::Contradiction("no three-agent branch is envy-free and proportional".into()))?;
    let mut t = win.table;
    let fin = t.assign_true(measures, &[2, 1, 0])?;
    let mut alloc = finish(&t, measures, &fin);
    alloc.notes.push(format!("branch {} of {}", win.index + 1, branches.len()));
    Ok(alloc)
}

/// Four agents: `vip` cuts four equal pieces, then the first of four
/// scripts after which everyone but `last` prefers two pieces.
pub fn divide_4_connected(
    measures: &[ValueMeasure],
    vip: AgentId,
    last: Option<AgentId>,
) -> Result<Allocation, DivisionError> {
    divide_4_connected_on(vec![Interval::unit()], measures, vip, last)
}

pub fn divide_4_connected_on(
    cake: Vec<Interval>,
    measures: &[ValueMeasure],
    vip: AgentId,
    last: Option<AgentId>,
) -> Result<Allocation, DivisionError> {
    if measures.len() != 4 {
        return Err(DivisionError::InvalidInput(format!(
            "four-agent division needs 4 agents, found {}",
            measures.len()
        )));
    }
    validate(measures, vip, 4)?;
    let (b, c, last) = middle_agents(4, vip, last)?;
    let mut table = Table::new(4, cake);
    table.equalize(vip, measures, 4)?;
    run_four_agent_engine(table, measures, b, c, last, false)
}

/// The two cutting agents besides `vip`, and the agent that never cuts.
pub(crate) fn middle_agents(
    n: usize,
    vip: AgentId,
    last: Option<AgentId>,
) -> Result<(AgentId, AgentId, AgentId), DivisionError> {
    let others: Vec<AgentId> = (0..n).filter(|&a| a != vip).collect();
    let last = last.unwrap_or(*others.last().expect("at least one other agent"));
    if last == vip || last >= n {
        return Err(DivisionError::InvalidInput("the last agent must differ from the vip".into()));
    }
    let mid: Vec<AgentId> = others.into_iter().filter(|&a| a != last).collect();
    Ok((mid[0], mid[1], last))
}

/// Value guaranteed to every agent by the improved variant.
pub fn improved_guarantee(n: usize) -> Rat {
    assert!(n >= 4);
    Rat::new(1.into(), (3 * (1i64 << (n - 3)) + 1).into())
}
