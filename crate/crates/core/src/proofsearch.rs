//! Symbolic Equalize engine over ordinal preferences.
//!
//! Pieces are named by their original index and a trim tag (`4b` is piece
//! 4 after `b` equalizes it to a second-best piece, `3bb` to a third-best
//! one). Each cutting agent carries a partial order over these names.
//! Pieces cut from the same original are nested, so a strict preference of
//! any one agent between two of them holds weakly for everybody.
//!
//! Two drivers sit on top: [`prove_4agent`] writes the case-by-case proof
//! that the four-agent branch set always leaves the first three agents with
//! two best pieces each, and [`search_template`] looks for ordinal profiles
//! under which every branch of a template fails. That search is
//! budgeted per profile, since showing that some branch survives can take
//! far longer than finding a joint failure.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

/// Agent index: `0` is the first cutter, the highest index never cuts.
pub type Agent = usize;

pub fn letter(a: Agent) -> char {
    (b'a' + a as u8) as char
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("bad inference: preferences of {0} became cyclic")]
    BadInference(char),
    #[error("case {case}: no branch succeeds")]
    Unprovable { case: usize },
    #[error("case must lie in 1..={max}, got {got}")]
    NoSuchCase { got: usize, max: usize },
    #[error("template line {line}: {msg}")]
    Template { line: usize, msg: String },
}

/// A piece on the symbolic table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPiece {
    /// Original piece, `1..=n`.
    pub origin: usize,
    /// Agent letters, one block of `k-1` letters per `Equalize(k)` trim.
    pub tag: String,
    pub parent: Option<usize>,
    pub cutter: Option<Agent>,
    /// `k - 1` of the query that produced it; zero for originals.
    pub level: usize,
}

impl SymbolicPiece {
    pub fn name(&self) -> String {
        format!("{}{}", self.origin, self.tag)
    }
}

/// Reflexive-transitive closure of weak and strict relations, bit rows.
#[derive(Debug, Clone, Default)]
struct Closure {
    size: usize,
    words: usize,
    le: Vec<u64>,
    lt: Vec<u64>,
}

impl Closure {
    fn bit(m: &[u64], words: usize, x: usize, y: usize) -> bool {
        m[x * words + y / 64] >> (y % 64) & 1 == 1
    }

    fn le(&self, x: usize, y: usize) -> bool {
        Self::bit(&self.le, self.words, x, y)
    }

    fn lt(&self, x: usize, y: usize) -> bool {
        Self::bit(&self.lt, self.words, x, y)
    }

    fn push(&mut self) {
        let i = self.size;
        self.size += 1;
        let need = self.size.div_ceil(64);
        if need > self.words {
            let grow = |m: &Vec<u64>, old: usize| {
                let mut out = vec![0u64; self.size.max(1) * need];
                for r in 0..i {
                    out[r * need..r * need + old].copy_from_slice(&m[r * old..r * old + old]);
                }
                out
            };
            self.le = grow(&self.le, self.words);
            self.lt = grow(&self.lt, self.words);
            self.words = need;
        } else {
            self.le.resize(self.size * self.words, 0);
            self.lt.resize(self.size * self.words, 0);
        }
        self.le[i * self.words + i / 64] |= 1 << (i % 64);
    }

    /// Adds `u <= v` (or `u < v`); false when it closes a strict cycle.
    fn add(&mut self, u: usize, v: usize, strict: bool) -> Result<bool, ()> {
        if self.le(u, v) && (!strict || self.lt(u, v)) {
            return Ok(false);
        }
        let w = self.words;
        let succ_le = self.le[v * w..(v + 1) * w].to_vec();
        let succ_lt = self.lt[v * w..(v + 1) * w].to_vec();
        for x in 0..self.size {
            if !self.le(x, u) {
                continue;
            }
            let through = strict || self.lt(x, u);
            for j in 0..w {
                self.le[x * w + j] |= succ_le[j];
                self.lt[x * w + j] |= if through { succ_le[j] } else { succ_lt[j] };
            }
            if self.lt(x, x) {
                return Err(());
            }
        }
        Ok(true)
    }
}

type PieceKey = (usize, Agent, usize, Vec<(Agent, usize)>);

/// Everything known about the cutters' preferences.
#[derive(Debug, Clone)]
pub struct Knowledge {
    n: usize,
    pieces: Vec<SymbolicPiece>,
    keys: HashMap<PieceKey, usize>,
    /// Orders of agents `1..=n-2`, index `agent - 1`.
    orders: Vec<Closure>,
}

impl Knowledge {
    /// `n` originals; `orders[i]` lists agent `i+1`'s originals from worst
    /// to best.
    pub fn new(n: usize, orders: &[Vec<usize>]) -> Result<Self, ProofError> {
        let mut k = Knowledge {
            n,
            pieces: Vec::new(),
            keys: HashMap::new(),
            orders: vec![Closure::default(); orders.len()],
        };
        for i in 1..=n {
            k.pieces.push(SymbolicPiece { origin: i, tag: String::new(), parent: None, cutter: None, level: 0 });
            for c in &mut k.orders {
                c.push();
            }
        }
        for (i, order) in orders.iter().enumerate() {
            for w in order.windows(2) {
                k.relate(i + 1, w[0] - 1, w[1] - 1, true)?;
            }
        }
        Ok(k)
    }

    pub fn pieces(&self) -> &[SymbolicPiece] {
        &self.pieces
    }

    pub fn name(&self, id: usize) -> String {
        self.pieces[id].name()
    }

    fn closure(&self, agent: Agent) -> &Closure {
        &self.orders[agent - 1]
    }

    /// `agent` weakly prefers `y` to `x`.
    pub fn weakly_below(&self, agent: Agent, x: usize, y: usize) -> bool {
        self.closure(agent).le(x, y)
    }

    pub fn strictly_below(&self, agent: Agent, x: usize, y: usize) -> bool {
        self.closure(agent).lt(x, y)
    }

    /// `agent` values `x` below `y` without the two being known equal.
    fn dominated(&self, agent: Agent, x: usize, y: usize) -> bool {
        let c = self.closure(agent);
        c.lt(x, y) || (c.le(x, y) && !c.le(y, x))
    }

    fn relate_raw(&mut self, agent: Agent, x: usize, y: usize, strict: bool) -> Result<bool, ProofError> {
        self.orders[agent - 1]
            .add(x, y, strict)
            .map_err(|_| ProofError::BadInference(letter(agent)))
    }

    /// Records `x < y` (or `x <= y`) for `agent` and spreads nesting facts.
    pub fn relate(&mut self, agent: Agent, x: usize, y: usize, strict: bool) -> Result<(), ProofError> {
        if self.relate_raw(agent, x, y, strict)? {
            self.propagate()?;
        }
        Ok(())
    }

    pub fn equal(&mut self, agent: Agent, x: usize, y: usize) -> Result<(), ProofError> {
        let a = self.relate_raw(agent, x, y, false)?;
        let b = self.relate_raw(agent, y, x, false)?;
        if a || b {
            self.propagate()?;
        }
        Ok(())
    }

    /// Same-origin pieces are nested: one agent's strict preference
    /// becomes a weak one for all.
    pub(crate) fn propagate(&mut self) -> Result<(), ProofError> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.n + 1];
        for (id, p) in self.pieces.iter().enumerate() {
            groups[p.origin].push(id);
        }
        loop {
            let mut pending = Vec::new();
            for g in &groups {
                for &x in g {
                    for &y in g {
                        if x != y
                            && self.orders.iter().any(|c| c.lt(x, y))
                            && self.orders.iter().any(|c| !c.le(x, y))
                        {
                            pending.push((x, y));
                        }
                    }
                }
            }
            if pending.is_empty() {
                return Ok(());
            }
            for (x, y) in pending {
                for a in 1..=self.orders.len() {
                    self.relate_raw(a, x, y, false)?;
                }
            }
        }
    }

    /// Piece obtained when `cutter` trims `parent` during `Equalize(k)`
    /// after the queries in `prefix`; created on first use.
    pub fn trim(&mut self, parent: usize, cutter: Agent, k: usize, prefix: &[(Agent, usize)]) -> usize {
        let key = (parent, cutter, k, prefix.to_vec());
        if let Some(&id) = self.keys.get(&key) {
            return id;
        }
        let p = &self.pieces[parent];
        let tag = format!("{}{}", p.tag, letter(cutter).to_string().repeat(k - 1));
        let id = self.pieces.len();
        self.pieces.push(SymbolicPiece {
            origin: p.origin,
            tag,
            parent: Some(parent),
            cutter: Some(cutter),
            level: k - 1,
        });
        for c in &mut self.orders {
            c.push();
            c.add(id, parent, false).expect("fresh piece closes no cycle");
        }
        self.keys.insert(key, id);
        id
    }
}

/// A fixed sequence of `Equalize` queries after the first cutter's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchScript {
    pub steps: Vec<(Agent, usize)>,
}

impl fmt::Display for BranchScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|&(a, k)| format!("{}:Equalize({k})", letter(a)))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// The four-agent branch set in proof order.
pub fn four_agent_template() -> Vec<BranchScript> {
    [(1, 2, 2), (2, 2, 1), (1, 3, 2), (2, 3, 1)]
        .iter()
        .map(|&(x, k, y)| BranchScript { steps: vec![(x, k), (y, 2)] })
        .collect()
}

/// The five-agent candidate branch set: for every order of `b, c, d`, the
/// first does `Equalize(2..=4)`, the second `Equalize(2..=3)`, the third
/// `Equalize(2)`.
pub fn five_agent_template() -> Vec<BranchScript> {
    let mut out = Vec::new();
    for perm in permutations(&[1, 2, 3]) {
        for k1 in 2..=4 {
            for k2 in 2..=3 {
                out.push(BranchScript { steps: vec![(perm[0], k1), (perm[1], k2), (perm[2], 2)] });
            }
        }
    }
    out
}

/// Lexicographic permutations.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Parses one branch per line, steps written `agent:k` (`b:2 c:3 d:2`).
/// An optional `agents: n` line fixes the number of agents; otherwise it
/// is one more than the highest agent letter used, and 5 for an empty file.
pub fn parse_template(text: &str) -> Result<(usize, Vec<BranchScript>), ProofError> {
    let mut n = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ProofError::Template { line: i + 1, msg };
        if let Some(v) = line.strip_prefix("agents:") {
            n = Some(v.trim().parse::<usize>().map_err(|e| err(e.to_string()))?);
            continue;
        }
        let mut steps = Vec::new();
        for tok in line.split_whitespace() {
            let (a, k) = tok.split_once(':').ok_or_else(|| err(format!("expected agent:k, found {tok}")))?;
            let mut chars = a.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(err(format!("agent must be one letter, found {a}")));
            };
            if !c.is_ascii_lowercase() || c == 'a' {
                return Err(err(format!("agent {c} cannot appear in a branch")));
            }
            let k = k.parse::<usize>().map_err(|e| err(e.to_string()))?;
            if k < 2 {
                return Err(err(format!("Equalize needs k >= 2, found {k}")));
            }
            steps.push(((c as u8 - b'a') as Agent, k));
        }
        out.push(BranchScript { steps });
    }
    let inferred = out.iter().flat_map(|b| b.steps.iter().map(|s| s.0 + 2)).max();
    let n = n.or(inferred).unwrap_or(5);
    for (i, b) in out.iter().enumerate() {
        for &(a, k) in &b.steps {
            if a + 2 > n || k > n {
                return Err(ProofError::Template {
                    line: i + 1,
                    msg: format!("{}:Equalize({k}) does not fit {n} agents", letter(a)),
                });
            }
        }
    }
    Ok((n, out))
}

/// One simulated run of a branch.
#[derive(Debug, Clone)]
struct Run {
    table: Vec<usize>,
    /// Each cutter's best pieces after its query, plus how many more are
    /// known to stay untouched.
    best: Vec<(Agent, Vec<usize>, usize)>,
    prefix: Vec<(Agent, usize)>,
}

impl Run {
    fn start(n: usize) -> Self {
        Run { table: (0..n).collect(), best: Vec::new(), prefix: Vec::new() }
    }

    fn originals_left(&self, n: usize) -> usize {
        self.table.iter().filter(|&&p| p < n).count()
    }

    /// Agents short of two best pieces, the first cutter included.
    fn short(&self, n: usize) -> Vec<Agent> {
        let mut out = Vec::new();
        if self.originals_left(n) < 2 {
            out.push(0);
        }
        for (a, set, extra) in &self.best {
            if extra + set.iter().filter(|p| self.table.contains(p)).count() < 2 {
                out.push(*a);
            }
        }
        out
    }
}

/// Subsets of `items` of size `k`, in lexicographic order.
fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out: Vec<Vec<usize>> = subsets(&items[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, items[0]);
            s
        })
        .collect();
    out.extend(subsets(&items[1..], k));
    out
}

/// Applies `agent:Equalize(k)` with `top` trimmed down to `kth`. With
/// `kth` absent only the choice of `top` is recorded, which is all that
/// matters for a branch's final query. Returns the updated knowledge and
/// run, or `None` if the choice contradicts what is known.
fn apply_equalize(
    know: &Knowledge,
    run: &Run,
    agent: Agent,
    k: usize,
    top: &[usize],
    kth: Option<usize>,
) -> Option<(Knowledge, Run, Vec<usize>)> {
    let mut know = know.clone();
    let rest: Vec<usize> = run
        .table
        .iter()
        .copied()
        .filter(|p| Some(*p) != kth && !top.contains(p))
        .collect();
    match kth {
        Some(kth) => {
            for &s in top {
                know.relate_raw(agent, kth, s, true).ok()?;
            }
            for &r in &rest {
                know.relate_raw(agent, r, kth, true).ok()?;
            }
        }
        None => {
            for &s in top {
                for &r in &rest {
                    know.relate_raw(agent, r, s, true).ok()?;
                }
            }
        }
    }
    let mut run = run.clone();
    let mut trims = Vec::new();
    for &s in top {
        let t = know.trim(s, agent, k, &run.prefix);
        if let Some(kth) = kth {
            know.relate_raw(agent, t, kth, false).ok()?;
            know.relate_raw(agent, kth, t, false).ok()?;
        }
        let pos = run.table.iter().position(|&p| p == s).expect("trimmed piece is on the table");
        run.table[pos] = t;
        trims.push(t);
    }
    know.propagate().ok()?;
    let mut set = trims.clone();
    set.extend(kth);
    // A final query's untouched best piece is never trimmed afterwards.
    run.best.push((agent, set, usize::from(kth.is_none())));
    run.prefix.push((agent, k));
    Some((know, run, trims))
}

/// Every consistent outcome of `agent:Equalize(k)` on the run's table.
/// On a branch's final query only the trimmed pieces are chosen.
fn equalize_outcomes(
    know: &Knowledge,
    run: &Run,
    agent: Agent,
    k: usize,
    last: bool,
) -> Vec<(Knowledge, Run, String)> {
    let mut out = Vec::new();
    let kths: Vec<Option<usize>> = if last { vec![None] } else { run.table.iter().map(|&p| Some(p)).collect() };
    for kth in kths {
        let rest: Vec<usize> = run.table.iter().copied().filter(|&p| Some(p) != kth).collect();
        for top in subsets(&rest, k - 1) {
            let others: Vec<usize> = rest.iter().copied().filter(|p| !top.contains(p)).collect();
            let blocked = match kth {
                Some(kth) => {
                    top.iter().any(|&s| know.weakly_below(agent, s, kth))
                        || others.iter().any(|&r| know.weakly_below(agent, kth, r))
                }
                None => top.iter().any(|&s| others.iter().any(|&r| know.weakly_below(agent, s, r))),
            };
            if blocked {
                continue;
            }
            if let Some((kn, rn, trims)) = apply_equalize(know, run, agent, k, &top, kth) {
                let mut names: Vec<String> = kth.iter().map(|&p| kn.name(p)).collect();
                names.extend(trims.iter().map(|&t| kn.name(t)));
                let text = format!("{}:Equalize({k}) trims {}", letter(agent), names.join("="));
                out.push((kn, rn, text));
            }
        }
    }
    out
}

/// A profile under which every branch of a template fails.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub n: usize,
    /// Orders of agents `1..=n-2` over the originals, worst first.
    pub orders: Vec<Vec<usize>>,
    /// One line per branch: the outcomes chosen and who is left short.
    pub cases: Vec<String>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.orders.iter().enumerate() {
            let s: Vec<String> = o.iter().map(|x| x.to_string()).collect();
            writeln!(f, "{}'s order is {}", letter(i + 1), s.join("<"))?;
        }
        for c in &self.cases {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

/// Calls `visit` on every completion of `script` that leaves some agent
/// short; stops as soon as `visit` returns true.
fn for_each_failure(
    n: usize,
    know: &Knowledge,
    script: &BranchScript,
    step: usize,
    run: &Run,
    trail: &mut Vec<String>,
    visit: &mut dyn FnMut(&Knowledge, String) -> bool,
) -> bool {
    if step == script.steps.len() {
        let short = run.short(n);
        if short.is_empty() {
            return false;
        }
        let who: String = short.iter().map(|&a| letter(a)).collect();
        return visit(know, format!("{script}: {}; short: {who}", trail.join(", ")));
    }
    let (agent, k) = script.steps[step];
    let last = step + 1 == script.steps.len();
    for (kn, rn, text) in equalize_outcomes(know, run, agent, k, last) {
        trail.push(text);
        let stop = for_each_failure(n, &kn, script, step + 1, &rn, trail, visit);
        trail.pop();
        if stop {
            return true;
        }
    }
    false
}

fn count_failures(n: usize, know: &Knowledge, script: &BranchScript, cap: usize) -> usize {
    let mut count = 0;
    for_each_failure(n, know, script, 0, &Run::start(n), &mut Vec::new(), &mut |_, _| {
        count += 1;
        count >= cap
    });
    count
}

/// Fail-first search with conflict weights: the branch with the fewest
/// failing completions per recorded conflict is settled next, its
/// completions tried in order of how much freedom they leave the others.
struct FailSearch<'a> {
    n: usize,
    template: &'a [BranchScript],
    weight: Vec<u64>,
    nodes_left: usize,
}

/// The node budget ran out.
struct Exhausted;

impl FailSearch<'_> {
    fn run(&mut self, know: &Knowledge, remaining: &[usize], cases: &mut Vec<(usize, String)>) -> Result<bool, Exhausted> {
        if remaining.is_empty() {
            return Ok(true);
        }
        self.nodes_left = self.nodes_left.checked_sub(1).ok_or(Exhausted)?;
        let (n, template) = (self.n, self.template);
        let mut pick: Option<(usize, u64)> = None;
        for (pos, &b) in remaining.iter().enumerate() {
            let c = count_failures(n, know, &template[b], 4) as u64;
            if c == 0 {
                self.weight[b] += 1;
                return Ok(false);
            }
            let better = match pick {
                None => true,
                Some((p, pc)) => c * self.weight[remaining[p]] < pc * self.weight[b],
            };
            if better {
                pick = Some((pos, c));
            }
        }
        let (pos, _) = pick.expect("remaining is not empty");
        let b = remaining[pos];
        let mut rest = remaining.to_vec();
        rest.remove(pos);
        let mut options: Vec<(usize, Knowledge, String)> = Vec::new();
        let weight = &mut self.weight;
        for_each_failure(n, know, &template[b], 0, &Run::start(n), &mut Vec::new(), &mut |kn, desc| {
            let mut slack = 0;
            for &r in &rest {
                let c = count_failures(n, kn, &template[r], 3);
                if c == 0 {
                    weight[r] += 1;
                    return false;
                }
                slack += c;
            }
            options.push((slack, kn.clone(), desc));
            false
        });
        if options.is_empty() {
            self.weight[b] += 1;
        }
        options.sort_by_key(|x| std::cmp::Reverse(x.0));
        for (_, kn, desc) in options {
            cases.push((b, desc));
            if self.run(&kn, &rest, cases)? {
                return Ok(true);
            }
            cases.pop();
        }
        Ok(false)
    }
}

/// Outcome of checking one profile against a template.
#[derive(Debug, Clone)]
pub enum FailCheck {
    /// Every branch can be made to fail at once.
    AllFail(Counterexample),
    /// Some branch succeeds whatever the answers.
    Holds,
    /// The node budget ran out first.
    Undecided,
}

/// Looks for outcomes, consistent across branches, under which every
/// branch leaves some non-last agent with fewer than two best pieces.
pub fn all_branches_fail(n: usize, orders: &[Vec<usize>], template: &[BranchScript]) -> Option<Counterexample> {
    match check_profile(n, orders, template, usize::MAX) {
        FailCheck::AllFail(c) => Some(c),
        _ => None,
    }
}

/// [`all_branches_fail`] with at most `nodes` search nodes.
pub fn check_profile(n: usize, orders: &[Vec<usize>], template: &[BranchScript], nodes: usize) -> FailCheck {
    let Ok(know) = Knowledge::new(n, orders) else {
        return FailCheck::Holds;
    };
    let mut cases = Vec::new();
    let all: Vec<usize> = (0..template.len()).collect();
    let mut search = FailSearch { n, template, weight: vec![1; template.len()], nodes_left: nodes };
    match search.run(&know, &all, &mut cases) {
        Err(Exhausted) => FailCheck::Undecided,
        Ok(false) => FailCheck::Holds,
        Ok(true) => {
            cases.sort_by_key(|c| c.0);
            FailCheck::AllFail(Counterexample {
                n,
                orders: orders.to_vec(),
                cases: cases.into_iter().map(|c| c.1).collect(),
            })
        }
    }
}

/// All ordinal profiles with `b` ascending, in lexicographic order of the
/// remaining agents' orders.
pub fn profiles(n: usize) -> Vec<Vec<Vec<usize>>> {
    let originals: Vec<usize> = (1..=n).collect();
    let perms = permutations(&originals);
    let mut out = vec![vec![originals.clone()]];
    for _ in 2..=n.saturating_sub(2) {
        out = out
            .into_iter()
            .flat_map(|p| {
                perms.iter().map(move |q| {
                    let mut p = p.clone();
                    p.push(q.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Node budget per profile used by [`search_template`].
pub const PROFILE_NODE_BUDGET: usize = 300;

/// Result of sweeping profiles in [`profiles`] order.
#[derive(Debug, Clone)]
pub struct SearchReport {
    /// First profile confirmed to defeat every branch.
    pub found: Option<Counterexample>,
    /// Profiles checked up to and including the one found.
    pub checked: usize,
    /// Profiles on which some branch was shown to succeed.
    pub holding: usize,
    /// Earlier profiles left open when their budget ran out.
    pub undecided: Vec<Vec<Vec<usize>>>,
}

/// Checks profiles in order, `nodes` search nodes each, until one is
/// confirmed to defeat the whole template.
pub fn search_template(n: usize, template: &[BranchScript], nodes: usize) -> SearchReport {
    let all = profiles(n);
    let mut report = SearchReport { found: None, checked: 0, holding: 0, undecided: Vec::new() };
    let chunk = 2 * rayon::current_num_threads();
    for batch in all.chunks(chunk) {
        let results: Vec<FailCheck> = batch.par_iter().map(|o| check_profile(n, o, template, nodes)).collect();
        for (orders, r) in batch.iter().zip(results) {
            report.checked += 1;
            match r {
                FailCheck::AllFail(c) => {
                    report.found = Some(c);
                    return report;
                }
                FailCheck::Holds => report.holding += 1,
                FailCheck::Undecided => report.undecided.push(orders.clone()),
            }
        }
    }
    report
}

const FOUR_BRANCHES: [(Agent, usize, Agent); 4] = [(1, 2, 2), (2, 2, 1), (1, 3, 2), (2, 3, 1)];

/// `agent prefers piece to others`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assumption {
    pub agent: Agent,
    pub preferred: String,
    pub others: Vec<String>,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} prefers {} to {}", letter(self.agent), self.preferred, self.others.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Succeeds,
    /// The chooser's best piece is fixed and breaks the branch.
    MustFail(Box<ProofNode>),
    /// Cases (possibly all of them) in which the branch breaks.
    MayFail(Vec<(Assumption, ProofNode)>),
}

/// One branch tried under the assumptions on the path to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub branch: usize,
    pub cutter: Agent,
    pub k: usize,
    pub chooser: Agent,
    /// The cutter's best pieces, untouched one first.
    pub best: Vec<String>,
    /// Nesting relations learned from this cut, smaller piece first.
    pub globals: Vec<(String, String)>,
    pub verdict: Verdict,
}

impl ProofNode {
    /// Branches that succeed at the leaves below this node.
    pub fn succeeding(&self) -> Vec<usize> {
        match &self.verdict {
            Verdict::Succeeds => vec![self.branch],
            Verdict::MustFail(next) => next.succeeding(),
            Verdict::MayFail(cases) => {
                let mut v: Vec<usize> = cases.iter().flat_map(|(_, n)| n.succeeding()).collect();
                v.sort_unstable();
                v.dedup();
                if !v.contains(&self.branch) {
                    v.insert(0, self.branch);
                }
                v
            }
        }
    }

    pub fn depth(&self) -> usize {
        match &self.verdict {
            Verdict::Succeeds => 1,
            Verdict::MustFail(next) => 1 + next.depth(),
            Verdict::MayFail(cases) => 1 + cases.iter().map(|(_, n)| n.depth()).max().unwrap_or(0),
        }
    }

    pub fn all_globals(&self) -> Vec<(String, String)> {
        let mut out = self.globals.clone();
        match &self.verdict {
            Verdict::Succeeds => {}
            Verdict::MustFail(next) => out.extend(next.all_globals()),
            Verdict::MayFail(cases) => {
                for (_, n) in cases {
                    out.extend(n.all_globals());
                }
            }
        }
        out
    }

    fn render(&self, out: &mut String) {
        let pad = " ".repeat(2 + 2 * self.branch);
        let c = letter(self.cutter);
        out.push_str(&format!("{pad}{c}:Equalize({}) makes {c}'s best pieces: {}", self.k, self.best.join("=")));
        if self.globals.is_empty() {
            out.push('.');
        } else {
            let g: Vec<String> = self.globals.iter().map(|(x, y)| format!("{x}<{y}")).collect();
            out.push_str(&format!(", so globally: {} .", g.join(" ")));
        }
        match &self.verdict {
            Verdict::Succeeds => out.push_str(" This always succeeds.\n"),
            Verdict::MustFail(next) => {
                out.push_str(&format!(" This must fail because of {}.\n", letter(self.chooser)));
                next.render(out);
            }
            Verdict::MayFail(cases) => {
                let list: Vec<String> = cases.iter().map(|(a, _)| a.to_string()).collect();
                let noun = if cases.len() == 1 { "case" } else { "cases" };
                out.push_str(&format!(" This may fail in {} {noun} : {} .\n", cases.len(), list.join(";  ")));
                for (a, node) in cases {
                    out.push_str(&format!("{pad} Assume the case   {a}. Then:\n"));
                    node.render(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofCase {
    pub index: usize,
    /// `c`'s order over the originals, worst first.
    pub order: Vec<usize>,
    pub root: ProofNode,
}

impl ProofCase {
    pub fn render(&self, total: usize) -> String {
        let o: Vec<String> = self.order.iter().map(|x| x.to_string()).collect();
        let mut out = format!("CASE {} OF {total} : c's order is {} :\n", self.index, o.join("<"));
        self.root.render(&mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofDoc {
    pub cases: Vec<ProofCase>,
}

impl ProofDoc {
    pub const TOTAL: usize = 24;

    pub fn render(&self) -> String {
        let mut out = String::from(
            "\nInitially, agent a cuts four equal pieces:  1,2,3,4 .\n\
             Assume w.l.o.g. that b's preferences are 1<2<3<4 .\n\
             Consider the following 24 cases regarding the preferences of c:\n\n",
        );
        for c in &self.cases {
            out.push_str(&c.render(Self::TOTAL));
            out.push('\n');
        }
        out.push_str("Q.E.D!\n");
        out
    }
}

/// `c`'s orders in case order: lexicographic permutations, reversed.
pub fn four_agent_cases() -> Vec<Vec<usize>> {
    let mut v = permutations(&[1, 2, 3, 4]);
    v.reverse();
    v
}

fn prove_branch(know: &Knowledge, order_of: &[Vec<usize>], d: usize, case: usize) -> Result<ProofNode, ProofError> {
    let &(x, k, y) = FOUR_BRANCHES.get(d).ok_or(ProofError::Unprovable { case })?;
    let order = &order_of[x - 1];
    let mut run = Run::start(4);
    run.table = order.iter().map(|&o| o - 1).collect();
    let top: Vec<usize> = order[4 - (k - 1)..].iter().map(|&o| o - 1).collect();
    let kth = order[4 - k] - 1;
    let (know, run, trims) = apply_equalize(know, &run, x, k, &top, Some(kth)).ok_or(ProofError::BadInference(letter(x)))?;
    // Listing follows table order.
    let mut listed: Vec<usize> = run.table.iter().copied().filter(|p| trims.contains(p)).collect();
    listed.insert(0, kth);
    let best: Vec<String> = listed.iter().map(|&p| know.name(p)).collect();
    let mut globals = Vec::new();
    for &t in listed.iter().skip(1) {
        let pt = &know.pieces()[t];
        for (o, po) in know.pieces().iter().enumerate() {
            if o == t || po.origin != pt.origin || po.level != pt.level || po.cutter == pt.cutter || po.cutter.is_none() {
                continue;
            }
            if know.strictly_below(x, t, o) {
                globals.push((know.name(t), know.name(o)));
            } else if know.strictly_below(x, o, t) {
                globals.push((know.name(o), know.name(t)));
            }
        }
    }
    let x_best = listed.clone();
    let breaks = |p: usize| -> bool {
        let originals_left = run.table.iter().filter(|&&q| q < 4 && q != p).count();
        let x_left = x_best.iter().filter(|&&q| q != p).count();
        originals_left < 2 || x_left < 2
    };
    let y_order = &order_of[y - 1];
    let y_top = y_order[3] - 1;
    let verdict = if run.table.contains(&y_top) {
        if breaks(y_top) {
            Verdict::MustFail(Box::new(prove_branch(&know, order_of, d + 1, case)?))
        } else {
            Verdict::Succeeds
        }
    } else {
        let mut candidates: Vec<usize> = run
            .table
            .iter()
            .copied()
            .filter(|&p| !run.table.iter().any(|&q| q != p && know.dominated(y, p, q)))
            .collect();
        let rank = |p: usize| y_order.iter().position(|&o| o == know.pieces()[p].origin).unwrap_or(0);
        candidates.sort_by_key(|&p| std::cmp::Reverse(rank(p)));
        let mut cases = Vec::new();
        for p in candidates.into_iter().filter(|&p| breaks(p)) {
            let others: Vec<usize> = run.table.iter().copied().filter(|&q| q != p).collect();
            let mut assumed = know.clone();
            for &q in &others {
                assumed.relate(y, q, p, true)?;
            }
            let node = prove_branch(&assumed, order_of, d + 1, case)?;
            let a = Assumption {
                agent: y,
                preferred: know.name(p),
                others: others.iter().map(|&q| know.name(q)).collect(),
            };
            cases.push((a, node));
        }
        if cases.is_empty() {
            Verdict::Succeeds
        } else {
            Verdict::MayFail(cases)
        }
    };
    Ok(ProofNode { branch: d, cutter: x, k, chooser: y, best, globals, verdict })
}

/// Proof for one of `c`'s 24 orders, `case` in `1..=24`.
pub fn prove_4agent_case(case: usize) -> Result<ProofCase, ProofError> {
    let orders = four_agent_cases();
    if case == 0 || case > orders.len() {
        return Err(ProofError::NoSuchCase { got: case, max: orders.len() });
    }
    let order = orders[case - 1].clone();
    let order_of = vec![vec![1, 2, 3, 4], order.clone()];
    let know = Knowledge::new(4, &order_of)?;
    let root = prove_branch(&know, &order_of, 0, case)?;
    Ok(ProofCase { index: case, order, root })
}

/// The full 24-case proof.
pub fn prove_4agent() -> Result<ProofDoc, ProofError> {
    let cases = (1..=ProofDoc::TOTAL)
        .into_par_iter()
        .map(prove_4agent_case)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProofDoc { cases })
}
