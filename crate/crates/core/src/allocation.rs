//! Final allocations and their audit data.

use num_traits::Zero;

use crate::measure::{union_intervals, AgentId, Interval, Rat, ValueMeasure};
use crate::queries::{QueryKind, QueryLog};

/// One executed query, for traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEvent {
    pub agent: AgentId,
    pub kind: QueryKind,
    pub k: usize,
    pub l_star: Rat,
    pub cuts: usize,
}

/// Per-round data of a repeated division on shrinking remainders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace {
    /// Outer pass this round belongs to (zero when there is only one).
    pub stage: usize,
    pub t: usize,
    pub vip: AgentId,
    /// Everything handed out this round.
    pub allocated: Vec<Interval>,
    /// Cumulative value held by each agent after the round.
    pub cumulative: Vec<Rat>,
    /// Value gained by each agent during the round.
    pub gained: Vec<Rat>,
    /// Value of the round's cake to each agent.
    pub round_cake: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub bundles: Vec<Vec<Interval>>,
    pub remainder: Vec<Interval>,
    /// `envy[i][j]` is agent `i`'s value of agent `j`'s bundle.
    pub envy: Vec<Vec<Rat>>,
    pub log: QueryLog,
    /// Size of the partition the bundles were chosen from.
    pub piece_count: usize,
    pub events: Vec<QueryEvent>,
    pub notes: Vec<String>,
    pub rounds: Vec<RoundTrace>,
}

impl Allocation {
    pub fn new(
        measures: &[ValueMeasure],
        bundles: Vec<Vec<Interval>>,
        remainder: Vec<Interval>,
        log: QueryLog,
        piece_count: usize,
    ) -> Self {
        let envy = envy_matrix(measures, &bundles);
        Allocation {
            bundles,
            remainder,
            envy,
            log,
            piece_count,
            events: Vec::new(),
            notes: Vec::new(),
            rounds: Vec::new(),
        }
    }

    pub fn agents(&self) -> usize {
        self.bundles.len()
    }

    pub fn value(&self, agent: AgentId) -> &Rat {
        &self.envy[agent][agent]
    }

    pub fn values(&self) -> Vec<Rat> {
        (0..self.agents()).map(|a| self.value(a).clone()).collect()
    }

    pub fn min_value(&self) -> Rat {
        self.values().into_iter().min().unwrap_or_else(Rat::zero)
    }

    pub fn is_envy_free(&self) -> bool {
        self.envy
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|v| v <= &row[i]))
    }

    /// Every bundle is a single interval (or empty).
    pub fn is_connected(&self) -> bool {
        self.bundles.iter().all(|b| b.len() <= 1)
    }

    /// No two bundles share a stretch of positive length.
    pub fn is_disjoint(&self) -> bool {
        let all: Vec<&Interval> = self.bundles.iter().flatten().chain(&self.remainder).collect();
        let mut sorted = all.clone();
        sorted.sort_by(|a, b| a.lo.cmp(&b.lo));
        sorted.windows(2).all(|w| w[0].hi <= w[1].lo)
    }

    pub fn remainder_values(&self, measures: &[ValueMeasure]) -> Vec<Rat> {
        measures.iter().map(|m| m.eval_intervals(&self.remainder)).collect()
    }

    /// The whole region covered by bundles and remainder.
    pub fn covered(&self) -> Vec<Interval> {
        let mut acc = self.remainder.clone();
        for b in &self.bundles {
            acc = union_intervals(&acc, b);
        }
        acc
    }
}

pub fn envy_matrix(measures: &[ValueMeasure], bundles: &[Vec<Interval>]) -> Vec<Vec<Rat>> {
    measures
        .iter()
        .map(|m| bundles.iter().map(|b| m.eval_intervals(b)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{int, rat};

    #[test]
    fn envy_matrix_and_checks() {
        let ms = vec![ValueMeasure::uniform(), ValueMeasure::uniform()];
        let a = Allocation::new(
            &ms,
            vec![
                vec![Interval::new(int(0), rat(1, 2))],
                vec![Interval::new(rat(1, 2), rat(3, 4))],
            ],
            vec![Interval::new(rat(3, 4), int(1))],
            QueryLog::new(2),
            3,
        );
        assert_eq!(a.envy[1][0], rat(1, 2));
        assert!(!a.is_envy_free());
        assert!(a.is_connected());
        assert!(a.is_disjoint());
        assert_eq!(a.min_value(), rat(1, 4));
        assert_eq!(a.covered(), vec![Interval::unit()]);
    }
}
