//! Mutable state of one division: the pieces on the table, their lineage,
//! and the bookkeeping that turns the true preference graph into the
//! reduced one.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::allocation::QueryEvent;
use crate::measure::{split_intervals_at, AgentId, Interval, MeasureError, Piece, PieceId, Rat, ValueMeasure};
use crate::prefgraph::{
    build_graph, finalize_allocation, max_matching_in_order, reduce_assumption2, reduce_by_history,
    Finalized, PrefGraphError, PreferenceGraph,
};
use crate::queries::{plan_equalize, plan_equalize_star, CutPlan, PieceRole, QueryError, QueryKind, QueryLog};

#[derive(Debug, Clone)]
pub struct Table {
    pieces: Vec<Piece>,
    reserve: Vec<Piece>,
    next_id: u32,
    originals: Vec<PieceId>,
    /// New pieces redirected onto an original.
    redirect: BTreeMap<PieceId, PieceId>,
    cut_times: BTreeMap<PieceId, usize>,
    query_times: Vec<Option<usize>>,
    time: usize,
    nominal: usize,
    pub log: QueryLog,
    pub events: Vec<QueryEvent>,
}

impl Table {
    pub fn new(agents: usize, cake: Vec<Interval>) -> Self {
        Table {
            pieces: vec![Piece::new(PieceId(0), cake)],
            reserve: Vec::new(),
            next_id: 1,
            originals: Vec::new(),
            redirect: BTreeMap::new(),
            cut_times: BTreeMap::new(),
            query_times: vec![None; agents],
            time: 0,
            nominal: 1,
            log: QueryLog::new(agents),
            events: Vec::new(),
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn reserve(&self) -> &[Piece] {
        &self.reserve
    }

    pub fn originals(&self) -> &[PieceId] {
        &self.originals
    }

    pub fn piece(&self, id: PieceId) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.id == id)
    }

    /// Partition size counting `k - 1` pieces for every `Equalize(k)`.
    pub fn nominal_pieces(&self) -> usize {
        self.nominal
    }

    /// Original piece whose Y-set holds `id`.
    pub fn group_of(&self, id: PieceId) -> PieceId {
        *self.redirect.get(&id).unwrap_or(&id)
    }

    /// Originals that were never cut after the first query.
    pub fn untouched_originals(&self) -> Vec<PieceId> {
        let first = self.cut_times.values().copied().min().unwrap_or(0);
        self.originals
            .iter()
            .copied()
            .filter(|id| self.cut_times.get(id).copied().unwrap_or(0) <= first)
            .collect()
    }

    pub fn equalize(&mut self, agent: AgentId, measures: &[ValueMeasure], k: usize) -> Result<CutPlan, TableError> {
        let plan = plan_equalize(agent, &measures[agent], &self.pieces, k)?;
        self.apply(plan, measures)
    }

    pub fn equalize_star(
        &mut self,
        agent: AgentId,
        measures: &[ValueMeasure],
        k: usize,
    ) -> Result<CutPlan, TableError> {
        let plan = plan_equalize_star(agent, &measures[agent], &self.pieces, k)?;
        self.apply(plan, measures)
    }

    fn fresh_id(&mut self) -> PieceId {
        let id = PieceId(self.next_id);
        self.next_id += 1;
        id
    }

    fn apply(&mut self, mut plan: CutPlan, measures: &[ValueMeasure]) -> Result<CutPlan, TableError> {
        let by_length = ValueMeasure::uniform();
        let measure = if plan.by_length { &by_length } else { &measures[plan.agent] };
        self.log.record_plan(&plan, self.pieces.len());
        self.time += 1;
        if plan.agent >= self.query_times.len() {
            self.query_times.resize(plan.agent + 1, None);
        }
        self.query_times[plan.agent] = Some(self.time);
        let first_query = self.originals.is_empty();
        let mut new_choosable: Vec<PieceId> = Vec::new();
        for cut in &plan.cuts {
            let idx = self
                .pieces
                .iter()
                .position(|p| p.id == cut.piece)
                .expect("plan refers to a piece on the table");
            let parent = self.pieces[idx].clone();
            let mut points = Vec::with_capacity(cut.targets.len());
            for t in &cut.targets {
                points.push(measure.mark(&parent, t)?);
            }
            let mut parts: Vec<Vec<Interval>> = Vec::new();
            let mut rest = parent.intervals.clone();
            for x in &points {
                let (left, right) = split_intervals_at(&rest, x);
                parts.push(left);
                rest = right;
            }
            parts.push(rest);
            for (i, ivs) in parts.into_iter().enumerate() {
                let id = if i == 0 { parent.id } else { self.fresh_id() };
                let mut piece = Piece::new(id, ivs);
                piece.origin = parent.origin;
                piece.last_cutter = Some(plan.agent);
                piece.is_new = i > 0 && !first_query;
                let role = match plan.kind {
                    QueryKind::EqualizeStar if i > 0 => PieceRole::Reserve,
                    QueryKind::EqualizeStar => PieceRole::Equalized,
                    QueryKind::Equalize if measures[plan.agent].eval(&piece) == plan.l_star => PieceRole::Equalized,
                    QueryKind::Equalize => PieceRole::Leftover,
                };
                plan.produced.push((id, role));
                self.cut_times.insert(id, self.time);
                if i == 0 {
                    self.pieces[idx] = piece;
                } else if role == PieceRole::Reserve {
                    self.reserve.push(piece);
                } else {
                    new_choosable.push(id);
                    self.pieces.push(piece);
                }
            }
        }
        match plan.kind {
            QueryKind::Equalize => self.nominal += plan.k.saturating_sub(1),
            QueryKind::EqualizeStar => self.nominal += plan.cut_count(),
        }
        if first_query {
            for p in &mut self.pieces {
                p.origin = p.id;
                p.is_new = false;
            }
            self.originals = self.pieces.iter().map(|p| p.id).collect();
            self.originals.sort();
        } else if !new_choosable.is_empty() {
            self.redirect_new(plan.agent, measures, &new_choosable)?;
        }
        self.events.push(QueryEvent {
            agent: plan.agent,
            kind: plan.kind,
            k: plan.k,
            l_star: plan.l_star.clone(),
            cuts: plan.cut_count(),
        });
        Ok(plan)
    }

    /// Maps each new piece to a distinct original, lowest first, avoiding
    /// the originals the cutter already prefers.
    fn redirect_new(
        &mut self,
        cutter: AgentId,
        measures: &[ValueMeasure],
        fresh: &[PieceId],
    ) -> Result<(), TableError> {
        let fresh_set: BTreeSet<PieceId> = fresh.iter().copied().collect();
        let best = crate::prefgraph::best_set(&measures[cutter], &self.pieces);
        let held: BTreeSet<PieceId> = best
            .iter()
            .filter(|p| !fresh_set.contains(p))
            .map(|p| self.group_of(*p))
            .collect();
        let mut used: BTreeSet<PieceId> = BTreeSet::new();
        for &p in fresh {
            let target = self
                .originals
                .iter()
                .find(|o| !used.contains(o) && !held.contains(o))
                .or_else(|| self.originals.iter().find(|o| !used.contains(o)))
                .copied()
                .ok_or(TableError::TooManyNewPieces)?;
            used.insert(target);
            self.redirect.insert(p, target);
        }
        Ok(())
    }

    /// Preference graph over every piece on the table, ties kept.
    pub fn true_graph(&mut self, measures: &[ValueMeasure]) -> PreferenceGraph {
        for a in 0..measures.len() {
            self.log.record_eval(a, self.pieces.len() as u64);
        }
        build_graph(&self.pieces, measures)
    }

    /// Graph with both reductions applied: no edges into later-cut ties, and
    /// every new piece folded into its original.
    pub fn reduced_graph(&mut self, measures: &[ValueMeasure]) -> PreferenceGraph {
        let g = self.true_graph(measures);
        let g = reduce_by_history(&g, &self.cut_times, &self.query_times);
        reduce_assumption2(&g, &self.redirect).expect("redirect targets are originals on the table")
    }

    /// Matching on the reduced graph, agents inserted in `order`, then each
    /// agent takes its best piece from its matched Y-set.
    pub fn assign_reduced(
        &mut self,
        measures: &[ValueMeasure],
        order: &[AgentId],
    ) -> Result<Finalized, PrefGraphError> {
        let g = self.reduced_graph(measures);
        let m = max_matching_in_order(&g, order)?;
        Ok(finalize_allocation(&m, &g, &self.pieces, measures))
    }

    /// Matching directly on the true graph.
    pub fn assign_true(&mut self, measures: &[ValueMeasure], order: &[AgentId]) -> Result<Finalized, PrefGraphError> {
        let g = self.true_graph(measures);
        let m = max_matching_in_order(&g, order)?;
        Ok(Finalized {
            remainder: self
                .pieces
                .iter()
                .map(|p| p.id)
                .filter(|id| !m.assigned.contains(id))
                .collect(),
            assignment: m.assigned,
        })
    }

    /// Intervals of everything not in `assignment`, reserve included.
    pub fn leftover_intervals(&self, assignment: &[PieceId]) -> Vec<Interval> {
        let mut ivs: Vec<Interval> = self
            .pieces
            .iter()
            .filter(|p| !assignment.contains(&p.id))
            .chain(&self.reserve)
            .flat_map(|p| p.intervals.iter().cloned())
            .collect();
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo));
        crate::measure::normalize_intervals(ivs)
    }

    pub fn intervals_of(&self, id: PieceId) -> Vec<Interval> {
        self.piece(id).map(|p| p.intervals.clone()).unwrap_or_default()
    }

    /// Each agent's best value among the pieces on the table.
    pub fn best_values(&self, measures: &[ValueMeasure]) -> Vec<Rat> {
        measures
            .iter()
            .map(|m| self.pieces.iter().map(|p| m.eval(p)).max().unwrap_or_else(Rat::zero))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("more new pieces than originals in one query")]
    TooManyNewPieces,
}
