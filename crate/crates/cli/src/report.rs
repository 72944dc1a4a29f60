//! Division reports, as aligned text or as `key=value` lines.

use std::collections::BTreeMap;
use std::fmt;

use envyfree::allocation::Allocation;
use envyfree::measure::{fmt_rat, parse_rat, Interval, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    AtMost,
    Equal,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
            Relation::Equal => "=",
        })
    }
}

/// A promised bound and the value actually reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantee {
    pub name: String,
    pub relation: Relation,
    pub bound: Rat,
    pub actual: Rat,
}

impl Guarantee {
    pub fn new(name: &str, relation: Relation, bound: Rat, actual: Rat) -> Self {
        Guarantee { name: name.to_string(), relation, bound, actual }
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::AtLeast => self.actual >= self.bound,
            Relation::AtMost => self.actual <= self.bound,
            Relation::Equal => self.actual == self.bound,
        }
    }

    /// `floor>=1/7` style label.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.name, self.relation, fmt_rat(&self.bound))
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub mode: String,
    pub names: Vec<String>,
    pub vip: Option<usize>,
    pub epsilon: Option<Rat>,
    pub allocation: Allocation,
    pub guarantees: Vec<Guarantee>,
    /// Extra lines describing the run (branch chosen, plan, events).
    pub trace: Vec<String>,
}

fn fmt_intervals(ivs: &[Interval]) -> String {
    if ivs.is_empty() {
        return "-".into();
    }
    ivs.iter()
        .map(|iv| format!("{}:{}", fmt_rat(&iv.lo), fmt_rat(&iv.hi)))
        .collect::<Vec<_>>()
        .join(",")
}

fn fmt_rats(v: &[Rat]) -> String {
    v.iter().map(fmt_rat).collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn all_hold(&self) -> bool {
        self.guarantees.iter().all(Guarantee::holds)
    }

    pub fn floor(&self) -> Rat {
        self.allocation.min_value()
    }

    pub fn render_text(&self) -> String {
        let a = &self.allocation;
        let n = self.names.len();
        let width = self.names.iter().map(String::len).max().unwrap_or(1).max(6);
        let mut out = format!("mode: {}\nagents: {n}\n", self.mode);
        if let Some(v) = self.vip {
            out.push_str(&format!("vip: {}\n", self.names[v]));
        }
        if let Some(e) = &self.epsilon {
            out.push_str(&format!("epsilon: {}\n", fmt_rat(e)));
        }
        out.push_str("\nallocation:\n");
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(&format!(
                "  {name:<width$}  value {:<10}  pieces {}\n",
                fmt_rat(a.value(i)),
                fmt_intervals(&a.bundles[i])
            ));
        }
        out.push_str(&format!("  {:<width$}  {}\n", "(left)", fmt_intervals(&a.remainder)));
        out.push_str("\nenvy matrix (row's value of column's bundle):\n");
        out.push_str(&format!("  {:<width$}", ""));
        for name in &self.names {
            out.push_str(&format!("  {name:>width$}"));
        }
        out.push('\n');
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(&format!("  {name:<width$}"));
            for v in &a.envy[i] {
                out.push_str(&format!("  {:>width$}", fmt_rat(v)));
            }
            out.push('\n');
        }
        out.push_str(&format!("\nenvy-free: {}\n", if a.is_envy_free() { "yes" } else { "NO" }));
        out.push_str(&format!("proportionality floor: {}\n", fmt_rat(&self.floor())));
        out.push_str(&format!("piece count: {}\n", a.piece_count));
        out.push_str("\nguarantees:\n");
        for g in &self.guarantees {
            out.push_str(&format!(
                "  {:<16} actual {:<10} {}\n",
                g.label(),
                fmt_rat(&g.actual),
                if g.holds() { "ok" } else { "VIOLATED" }
            ));
        }
        let total = a.log.total();
        out.push_str(&format!(
            "\nqueries: {} eval, {} mark ({} Equalize, {} Equalize*)\n",
            total.eval, total.mark, total.equalize, total.equalize_star
        ));
        for (i, name) in self.names.iter().enumerate() {
            let c = a.log.agent(i);
            out.push_str(&format!("  {name:<width$}  {} eval, {} mark\n", c.eval, c.mark));
        }
        if !a.events.is_empty() {
            out.push_str("\nquery trace:\n");
            for e in &a.events {
                out.push_str(&format!(
                    "  {} {}({}) l*={} cuts={}\n",
                    self.names.get(e.agent).map(String::as_str).unwrap_or("?"),
                    e.kind,
                    e.k,
                    fmt_rat(&e.l_star),
                    e.cuts
                ));
            }
        }
        if !a.rounds.is_empty() {
            out.push_str("\nrounds:\n");
            for r in &a.rounds {
                out.push_str(&format!(
                    "  stage {} round {} vip {}: gained [{}] holding [{}]\n",
                    r.stage + 1,
                    r.t,
                    self.names[r.vip],
                    fmt_rats(&r.gained),
                    fmt_rats(&r.cumulative)
                ));
            }
        }
        let notes: Vec<&String> = a.notes.iter().chain(&self.trace).collect();
        if !notes.is_empty() {
            out.push_str("\nnotes:\n");
            for t in notes {
                out.push_str(&format!("  {t}\n"));
            }
        }
        out
    }

    pub fn render_machine(&self) -> String {
        let a = &self.allocation;
        let mut lines = vec![format!("mode={}", self.mode), format!("agents={}", self.names.len())];
        if let Some(v) = self.vip {
            lines.push(format!("vip={}", self.names[v]));
        }
        if let Some(e) = &self.epsilon {
            lines.push(format!("epsilon={}", fmt_rat(e)));
        }
        for (i, name) in self.names.iter().enumerate() {
            lines.push(format!("agent.{i}.name={name}"));
            lines.push(format!("agent.{i}.value={}", fmt_rat(a.value(i))));
            lines.push(format!("agent.{i}.pieces={}", fmt_intervals(&a.bundles[i])));
            lines.push(format!("agent.{i}.envy={}", fmt_rats(&a.envy[i])));
            let c = a.log.agent(i);
            lines.push(format!("agent.{i}.queries={} {} {} {}", c.eval, c.mark, c.equalize, c.equalize_star));
        }
        lines.push(format!("remainder={}", fmt_intervals(&a.remainder)));
        lines.push(format!("envy_free={}", a.is_envy_free()));
        lines.push(format!("floor={}", fmt_rat(&self.floor())));
        lines.push(format!("pieces={}", a.piece_count));
        let total = a.log.total();
        lines.push(format!("queries={} {} {} {}", total.eval, total.mark, total.equalize, total.equalize_star));
        for (i, g) in self.guarantees.iter().enumerate() {
            lines.push(format!(
                "guarantee.{i}={} {} {} {}",
                g.name,
                g.relation,
                fmt_rat(&g.bound),
                fmt_rat(&g.actual)
            ));
        }
        for (i, e) in a.events.iter().enumerate() {
            lines.push(format!("event.{i}={} {} {} {} {}", e.agent, e.kind, e.k, fmt_rat(&e.l_star), e.cuts));
        }
        for (i, r) in a.rounds.iter().enumerate() {
            lines.push(format!(
                "round.{i}={} {} {} | {} | {}",
                r.stage,
                r.t,
                r.vip,
                fmt_rats(&r.gained),
                fmt_rats(&r.cumulative)
            ));
        }
        for (i, t) in a.notes.iter().chain(&self.trace).enumerate() {
            lines.push(format!("note.{i}={t}"));
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Machine report split into its keys.
pub fn parse_machine(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Space-separated rationals of a machine report value.
pub fn parse_rats(value: &str) -> Option<Vec<Rat>> {
    value.split_whitespace().map(parse_rat).collect()
}

/// `lo:hi,lo:hi` intervals of a machine report value.
pub fn parse_intervals(value: &str) -> Option<Vec<Interval>> {
    if value == "-" {
        return Some(Vec::new());
    }
    value
        .split(',')
        .map(|p| {
            let (lo, hi) = p.split_once(':')?;
            Some(Interval::new(parse_rat(lo)?, parse_rat(hi)?))
        })
        .collect()
}
