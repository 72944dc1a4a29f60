//! The three subcommands, independent of argument parsing.

use std::fmt;

use envyfree::connected::{
    divide_3_connected, divide_4_connected, divide_n_connected, divide_n_connected_improved, improved_guarantee,
};
use envyfree::entirecake::{divide_entire_traced, entire_round_bound};
use envyfree::error::DivisionError;
use envyfree::measure::{fmt_rat, int, rat, Interval, Rat};
use envyfree::proofsearch::{
    check_profile, five_agent_template, letter, parse_template, prove_4agent, prove_4agent_case, search_template,
    FailCheck, ProofDoc, ProofError, PROFILE_NODE_BUDGET,
};
use envyfree::reductions::{divide_4_disconnected, divide_n_disconnected, vip_share_denominator};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::report::{Guarantee, Relation, Report};
use crate::valuation::{Valuation, ValuationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Successive Equalize, any number of agents.
    ConnectedN,
    /// Three agents, connected pieces, each at least 1/3.
    #[value(name = "connected-3")]
    Connected3,
    /// Four agents, connected pieces, each at least 1/7, VIP at least 1/4.
    #[value(name = "connected-4")]
    Connected4,
    /// Successive Equalize with the four-agent routine as its base case.
    ConnectedNImproved,
    /// Four agents, disconnected pieces, each at least 1/4.
    #[value(name = "disconnected-4")]
    Disconnected4,
    /// Any number of agents, disconnected pieces, each at least (1-eps)/n.
    DisconnectedN,
    /// At most four agents, the whole cake handed out.
    Entire,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ConnectedN => "connected-n",
            Mode::Connected3 => "connected-3",
            Mode::Connected4 => "connected-4",
            Mode::ConnectedNImproved => "connected-n-improved",
            Mode::Disconnected4 => "disconnected-4",
            Mode::DisconnectedN => "disconnected-n",
            Mode::Entire => "entire",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Division(#[from] DivisionError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error("guarantee violated: {0}")]
    Violated(String),
}

impl CliError {
    /// 2 for bad input, 3 for a broken guarantee or internal contradiction.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Valuation(_) | CliError::Io { .. } => 2,
            CliError::Division(e) if e.is_input_error() => 2,
            CliError::Proof(ProofError::NoSuchCase { .. } | ProofError::Template { .. }) => 2,
            _ => 3,
        }
    }
}

pub fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_string(), source })
}

fn need_agents(mode: Mode, n: usize, ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("mode {mode} needs {what}, the valuation has {n}")))
    }
}

fn pow2(e: usize) -> Rat {
    int(1i64 << e)
}

/// Runs one division and collects its report. Guarantees are checked by
/// the caller through [`Report::all_hold`].
pub fn divide(v: &Valuation, mode: Mode, vip: Option<&str>, epsilon: Option<Rat>) -> Result<Report, CliError> {
    let n = v.measures.len();
    let ms = &v.measures;
    let vip_id = match vip {
        Some(name) => v.agent(name).ok_or_else(|| CliError::Usage(format!("no agent named {name}")))?,
        None => 0,
    };
    let mut guarantees = Vec::new();
    let mut trace = Vec::new();
    let mut report_vip = None;
    let mut report_eps = None;
    let allocation = match mode {
        Mode::ConnectedN => {
            need_agents(mode, n, (2..=20).contains(&n), "between 2 and 20 agents")?;
            let a = divide_n_connected(ms, vip_id)?;
            report_vip = Some(vip_id);
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, Rat::one() / pow2(n - 1), a.min_value()));
            guarantees.push(Guarantee::new(
                "vip",
                Relation::AtLeast,
                rat(1, vip_share_denominator(n) as i64),
                a.value(vip_id).clone(),
            ));
            guarantees.push(Guarantee::new("pieces", Relation::Equal, pow2(n - 1), int(a.piece_count as i64)));
            a
        }
        Mode::Connected3 => {
            need_agents(mode, n, n == 3, "exactly 3 agents")?;
            let a = divide_3_connected(ms)?;
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, rat(1, 3), a.min_value()));
            a
        }
        Mode::Connected4 => {
            need_agents(mode, n, n == 4, "exactly 4 agents")?;
            let a = divide_4_connected(ms, vip_id, None)?;
            report_vip = Some(vip_id);
            guarantees.push(Guarantee::new("pieces", Relation::AtMost, int(7), int(a.piece_count as i64)));
            guarantees.push(Guarantee::new("vip", Relation::AtLeast, rat(1, 4), a.value(vip_id).clone()));
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, rat(1, 7), a.min_value()));
            a
        }
        Mode::ConnectedNImproved => {
            need_agents(mode, n, (4..=20).contains(&n), "between 4 and 20 agents")?;
            let a = divide_n_connected_improved(ms, vip_id)?;
            report_vip = Some(vip_id);
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, improved_guarantee(n), a.min_value()));
            a
        }
        Mode::Disconnected4 => {
            need_agents(mode, n, n == 4, "exactly 4 agents")?;
            let a = divide_4_disconnected(ms)?;
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, rat(1, 4), a.min_value()));
            a
        }
        Mode::DisconnectedN => {
            need_agents(mode, n, (2..=12).contains(&n), "between 2 and 12 agents")?;
            let eps = epsilon.ok_or_else(|| CliError::Usage("mode disconnected-n needs --epsilon".into()))?;
            let a = divide_n_disconnected(ms, &eps)?;
            let bound = (Rat::one() - &eps) / int(n as i64);
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, bound, a.min_value()));
            report_eps = Some(eps);
            a
        }
        Mode::Entire => {
            need_agents(mode, n, (1..=4).contains(&n), "between 1 and 4 agents")?;
            let out = divide_entire_traced(vec![Interval::unit()], ms)?;
            let a = out.allocation;
            let left = a.remainder_values(ms).into_iter().max().unwrap_or_else(Rat::zero);
            guarantees.push(Guarantee::new("floor", Relation::AtLeast, rat(1, n as i64), a.min_value()));
            guarantees.push(Guarantee::new("left", Relation::Equal, Rat::zero(), left));
            guarantees.push(Guarantee::new(
                "rounds",
                Relation::AtMost,
                int(entire_round_bound(n).max(1) as i64),
                int(out.rounds as i64),
            ));
            trace.push(format!("VIP rounds: {}", out.rounds));
            trace.push(format!("domination edges: {}", out.graph));
            a
        }
    };
    guarantees.push(Guarantee::new("envy", Relation::Equal, Rat::zero(), max_envy(&allocation.envy)));
    Ok(Report {
        mode: mode.to_string(),
        names: v.names.clone(),
        vip: report_vip,
        epsilon: report_eps,
        allocation,
        guarantees,
        trace,
    })
}

/// Largest amount by which some agent values another bundle over its own.
fn max_envy(envy: &[Vec<Rat>]) -> Rat {
    let mut worst = Rat::zero();
    for (i, row) in envy.iter().enumerate() {
        for v in row {
            let d = v - &row[i];
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// The four-agent proof, or one case of it.
pub fn prove4(case: Option<usize>) -> Result<String, CliError> {
    match case {
        None => Ok(prove_4agent()?.render()),
        Some(c) => Ok(prove_4agent_case(c)?.render(ProofDoc::TOTAL)),
    }
}

/// Parses `12345/12345/13245`: one order (worst first) per cutting agent
/// after the first.
pub fn parse_profile(text: &str, n: usize) -> Result<Vec<Vec<usize>>, CliError> {
    let orders: Vec<Vec<usize>> = text
        .split('/')
        .map(|o| o.trim().chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Usage(format!("bad profile `{text}`: use digit strings such as 12345/12345/13245")))?;
    let expected = n.saturating_sub(2);
    if orders.len() != expected {
        return Err(CliError::Usage(format!("profile needs {expected} orders for {n} agents, found {}", orders.len())));
    }
    for o in &orders {
        let mut sorted = o.clone();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(CliError::Usage(format!("each order must list the pieces 1..{n} once")));
        }
    }
    Ok(orders)
}

fn fmt_profile(orders: &[Vec<usize>]) -> String {
    orders
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let s: Vec<String> = o.iter().map(|x| x.to_string()).collect();
            format!("{} {}", letter(i + 1), s.join("<"))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Counterexample search (or a single profile check) for a branch template.
pub fn search5(template: Option<&str>, profile: Option<&str>, budget: Option<usize>) -> Result<String, CliError> {
    let (n, branches) = match template {
        Some(text) => parse_template(text)?,
        None => (5, five_agent_template()),
    };
    let mut out = format!("template: {} branches, {n} agents\n", branches.len());
    if let Some(p) = profile {
        let orders = parse_profile(p, n)?;
        out.push_str(&format!("profile: {}\n", fmt_profile(&orders)));
        match check_profile(n, &orders, &branches, budget.unwrap_or(usize::MAX)) {
            FailCheck::AllFail(c) => {
                out.push_str(&format!("all {} branches fail:\n{c}", branches.len()));
            }
            FailCheck::Holds => out.push_str("some branch always succeeds\n"),
            FailCheck::Undecided => out.push_str("undecided within the node budget\n"),
        }
        return Ok(out);
    }
    let budget = budget.unwrap_or(PROFILE_NODE_BUDGET);
    let report = search_template(n, &branches, budget);
    out.push_str(&format!("profiles checked: {}\n", report.checked));
    out.push_str(&format!("  some branch always succeeds: {}\n", report.holding));
    out.push_str(&format!("  undecided within {budget} nodes: {}\n", report.undecided.len()));
    for o in &report.undecided {
        out.push_str(&format!("    {}\n", fmt_profile(o)));
    }
    match report.found {
        Some(c) => out.push_str(&format!("counterexample, all {} branches fail:\n{c}", branches.len())),
        None => out.push_str("no counterexample\n"),
    }
    Ok(out)
}

/// Rational flag values such as `1/10`.
pub fn parse_epsilon(s: &str) -> Result<Rat, String> {
    envyfree::measure::parse_rat(s).ok_or_else(|| format!("malformed rational `{s}`"))
}

/// Formats a rational for messages.
pub fn show(r: &Rat) -> String {
    fmt_rat(r)
}
