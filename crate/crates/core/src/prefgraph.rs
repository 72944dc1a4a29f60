//! Bipartite agent-to-piece preference graphs, their reductions, Hall
//! violations and saturating matchings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::measure::{AgentId, Piece, PieceId, Rat, ValueMeasure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefGraphError {
    #[error("no saturating matching; Hall violated by {0:?}")]
    NoMatching(Vec<BTreeSet<AgentId>>),
    #[error("piece {0} is not a node of the graph")]
    UnknownPiece(PieceId),
    #[error("agent {0} is not matched")]
    Unmatched(AgentId),
}

/// Edge `a -> p` means agent `a` weakly prefers `p` to every piece on the
/// table. Each node stands for its Y-set: itself plus the pieces that were
/// redirected onto it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceGraph {
    pub agents: usize,
    pub pieces: BTreeSet<PieceId>,
    pub edges: Vec<BTreeSet<PieceId>>,
    pub last_cutter: BTreeMap<PieceId, Option<AgentId>>,
    pub y_sets: BTreeMap<PieceId, BTreeSet<PieceId>>,
}

impl PreferenceGraph {
    pub fn degree(&self, agent: AgentId) -> usize {
        self.edges[agent].len()
    }

    pub fn neighborhood(&self, group: &BTreeSet<AgentId>) -> BTreeSet<PieceId> {
        group.iter().flat_map(|&a| self.edges[a].iter().copied()).collect()
    }

    /// Adjacency listing, one agent per line.
    pub fn dump(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (a, e) in self.edges.iter().enumerate() {
            let name = names.get(a).cloned().unwrap_or_else(|| a.to_string());
            let list: Vec<String> = e.iter().map(|p| p.to_string()).collect();
            out.push_str(&format!("{name} -> {}\n", list.join(" ")));
        }
        out
    }
}

impl fmt::Display for PreferenceGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump(&[]))
    }
}

/// Best pieces of one agent among `pieces`, ties kept.
pub fn best_set(measure: &ValueMeasure, pieces: &[Piece]) -> BTreeSet<PieceId> {
    let values: Vec<Rat> = pieces.iter().map(|p| measure.eval(p)).collect();
    let Some(max) = values.iter().max() else {
        return BTreeSet::new();
    };
    pieces
        .iter()
        .zip(&values)
        .filter(|(_, v)| *v == max)
        .map(|(p, _)| p.id)
        .collect()
}

pub fn build_graph(pieces: &[Piece], measures: &[ValueMeasure]) -> PreferenceGraph {
    PreferenceGraph {
        agents: measures.len(),
        pieces: pieces.iter().map(|p| p.id).collect(),
        edges: measures.iter().map(|m| best_set(m, pieces)).collect(),
        last_cutter: pieces.iter().map(|p| (p.id, p.last_cutter)).collect(),
        y_sets: pieces.iter().map(|p| (p.id, BTreeSet::from([p.id]))).collect(),
    }
}

/// Drops edges that tie with an earlier-cut preferred piece.
///
/// `cut_times` gives the time of the latest cut of each piece (missing
/// means never cut) and `query_times` the time of each agent's latest
/// query. An agent keeps a piece when it was cut no later than its oldest
/// preferred piece, or no later than the agent's own latest query. Applied
/// after every query this is the rule "after X cuts piece i, any other
/// agent that also prefers a piece j != i stops preferring i", with the
/// cutter exempt.
pub fn reduce_by_history(
    g: &PreferenceGraph,
    cut_times: &BTreeMap<PieceId, usize>,
    query_times: &[Option<usize>],
) -> PreferenceGraph {
    let time = |p: &PieceId| cut_times.get(p).copied().unwrap_or(0);
    let mut out = g.clone();
    for (agent, edges) in out.edges.iter_mut().enumerate() {
        let Some(oldest) = edges.iter().map(time).min() else {
            continue;
        };
        let own = query_times.get(agent).copied().flatten().unwrap_or(0);
        let threshold = oldest.max(own);
        edges.retain(|p| time(p) <= threshold);
    }
    out
}

/// One-step form of [`reduce_by_history`] for the pieces cut by `cutter`
/// in the latest query.
pub fn reduce_assumption1(g: &PreferenceGraph, just_cut: &BTreeSet<PieceId>, cutter: AgentId) -> PreferenceGraph {
    let times = just_cut.iter().map(|&p| (p, 1)).collect();
    let mut queries = vec![None; g.agents];
    if cutter < g.agents {
        queries[cutter] = Some(1);
    }
    reduce_by_history(g, &times, &queries)
}

/// Redirects every edge into a key of `mapping` to its image and merges the
/// Y-sets accordingly.
pub fn reduce_assumption2(
    g: &PreferenceGraph,
    mapping: &BTreeMap<PieceId, PieceId>,
) -> Result<PreferenceGraph, PrefGraphError> {
    let mut out = g.clone();
    for (from, to) in mapping {
        if !g.pieces.contains(from) {
            return Err(PrefGraphError::UnknownPiece(*from));
        }
        if !g.pieces.contains(to) || mapping.contains_key(to) {
            return Err(PrefGraphError::UnknownPiece(*to));
        }
    }
    for edges in &mut out.edges {
        *edges = edges.iter().map(|p| *mapping.get(p).unwrap_or(p)).collect();
    }
    for (from, to) in mapping {
        out.pieces.remove(from);
        out.last_cutter.remove(from);
        let moved = out.y_sets.remove(from).unwrap_or_default();
        out.y_sets.entry(*to).or_default().extend(moved);
    }
    Ok(out)
}

/// All inclusion-minimal agent groups whose joint neighborhood is smaller
/// than the group.
pub fn hall_check(g: &PreferenceGraph) -> Vec<BTreeSet<AgentId>> {
    let n = g.agents;
    assert!(n < 24, "brute-force Hall check is limited to small groups");
    let violating: Vec<u32> = (1u32..(1 << n))
        .filter(|&mask| {
            let group: BTreeSet<AgentId> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
            g.neighborhood(&group).len() < group.len()
        })
        .collect();
    violating
        .iter()
        .filter(|&&s| !violating.iter().any(|&t| t != s && t & s == t))
        .map(|&s| (0..n).filter(|a| s >> a & 1 == 1).collect())
        .collect()
}

/// Saturating matching: `assigned[a]` is the piece node matched to agent `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub assigned: Vec<PieceId>,
}

pub fn max_matching(g: &PreferenceGraph) -> Result<Matching, PrefGraphError> {
    let order: Vec<AgentId> = (0..g.agents).collect();
    max_matching_in_order(g, &order)
}

/// Augmenting-path matching that inserts agents in `order` and tries
/// pieces by ascending id.
pub fn max_matching_in_order(g: &PreferenceGraph, order: &[AgentId]) -> Result<Matching, PrefGraphError> {
    let mut owner: BTreeMap<PieceId, AgentId> = BTreeMap::new();
    for &a in order {
        let mut seen = BTreeSet::new();
        if !augment(g, a, &mut owner, &mut seen) {
            return Err(PrefGraphError::NoMatching(hall_check(g)));
        }
    }
    let mut assigned = vec![None; g.agents];
    for (p, a) in owner {
        assigned[a] = Some(p);
    }
    let assigned = assigned
        .into_iter()
        .enumerate()
        .map(|(a, p)| p.ok_or(PrefGraphError::Unmatched(a)))
        .collect::<Result<_, _>>()?;
    Ok(Matching { assigned })
}

fn augment(
    g: &PreferenceGraph,
    agent: AgentId,
    owner: &mut BTreeMap<PieceId, AgentId>,
    seen: &mut BTreeSet<PieceId>,
) -> bool {
    for &p in &g.edges[agent] {
        if !seen.insert(p) {
            continue;
        }
        let free = match owner.get(&p).copied() {
            None => true,
            Some(other) => augment(g, other, owner, seen),
        };
        if free {
            owner.insert(p, agent);
            return true;
        }
    }
    false
}

/// Outcome of handing every agent its best piece from its matched Y-set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finalized {
    pub assignment: Vec<PieceId>,
    pub remainder: Vec<PieceId>,
}

pub fn finalize_allocation(
    matching: &Matching,
    g: &PreferenceGraph,
    pieces: &[Piece],
    measures: &[ValueMeasure],
) -> Finalized {
    let by_id: BTreeMap<PieceId, &Piece> = pieces.iter().map(|p| (p.id, p)).collect();
    let assignment: Vec<PieceId> = matching
        .assigned
        .iter()
        .enumerate()
        .map(|(a, node)| {
            let members = g.y_sets.get(node).cloned().unwrap_or_else(|| BTreeSet::from([*node]));
            let candidates: Vec<Piece> = members
                .iter()
                .filter_map(|id| by_id.get(id).map(|p| (*p).clone()))
                .collect();
            // best_set is ordered by id, so the first element breaks ties.
            *best_set(&measures[a], &candidates)
                .iter()
                .next()
                .expect("every Y-set holds at least one piece")
        })
        .collect();
    let taken: BTreeSet<PieceId> = assignment.iter().copied().collect();
    let remainder = pieces.iter().map(|p| p.id).filter(|id| !taken.contains(id)).collect();
    Finalized { assignment, remainder }
}
