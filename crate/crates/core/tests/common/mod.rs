#![allow(dead_code)]

use std::collections::BTreeSet;

use envyfree::connected::divide_4_connected;
use envyfree::measure::{int, rat, Interval, Rat, ValueMeasure};
use envyfree::prefgraph::PreferenceGraph;
use envyfree::proofsearch::{four_agent_cases, letter, prove_4agent_case, ProofNode, Verdict};
use envyfree::PieceId;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_profile(rng: &mut impl Rng, n: usize, max_segments: usize) -> Vec<ValueMeasure> {
    (0..n).map(|_| ValueMeasure::random(rng, max_segments)).collect()
}

/// Stick division by brute force: every way of drawing `k` sticks, `c_i`
/// from stick `i`, yields `min v_i / c_i`; the answer is the best of these.
pub fn stick_oracle(lengths: &[Rat], k: usize) -> Rat {
    fn go(lengths: &[Rat], left: usize, i: usize, cur: Option<Rat>, best: &mut Rat) {
        if i == lengths.len() {
            if left == 0 {
                if let Some(c) = cur {
                    if c > *best {
                        *best = c;
                    }
                }
            }
            return;
        }
        for c in 0..=left {
            let next = if c == 0 {
                cur.clone()
            } else {
                let l = &lengths[i] / int(c as i64);
                Some(match &cur {
                    Some(x) if *x < l => x.clone(),
                    _ => l,
                })
            };
            go(lengths, left - c, i + 1, next, best);
        }
    }
    let mut best = Rat::zero();
    go(lengths, k, 0, None, &mut best);
    best
}

/// Whether some injective choice gives every agent one of its edges.
pub fn matching_oracle(edges: &[BTreeSet<PieceId>]) -> bool {
    fn go(edges: &[BTreeSet<PieceId>], a: usize, used: &mut Vec<PieceId>) -> bool {
        if a == edges.len() {
            return true;
        }
        for &p in &edges[a] {
            if !used.contains(&p) {
                used.push(p);
                if go(edges, a + 1, used) {
                    return true;
                }
                used.pop();
            }
        }
        false
    }
    go(edges, 0, &mut Vec::new())
}

/// Groups of agents whose neighbourhood is smaller than the group, all of
/// them (not only the minimal ones).
pub fn hall_violations_oracle(g: &PreferenceGraph) -> Vec<BTreeSet<usize>> {
    let n = g.agents;
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let group: BTreeSet<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
        let hood: BTreeSet<PieceId> = group.iter().flat_map(|&a| g.edges[a].iter().copied()).collect();
        if hood.len() < group.len() {
            out.push(group);
        }
    }
    out
}

/// A concrete piece in the proof's naming scheme: the right-hand part
/// `[lo, hi]` of an original quarter.
#[derive(Clone, Debug)]
struct Concrete {
    name: String,
    origin: usize,
    lo: Rat,
    hi: Rat,
    trimmed: bool,
}

/// What a realized four-agent profile did along its proof path.
#[derive(Debug)]
pub struct BridgeRun {
    pub case: usize,
    /// Branch indices visited, the last one succeeding.
    pub path: Vec<usize>,
}

/// Realizes the four-agent proof on concrete measures: `a` is uniform and
/// cuts quarters, `others` are `b`, `c` and `d`. Originals are
/// named by `b`'s order. Walks the proof tree, checking each assumption
/// against the concrete values, that predicted failures fail, and that the
/// final branch concretely leaves `a`, `b` and `c` with two best pieces and
/// a saturating matching. `Ok(None)` marks a profile with ties.
pub fn realize_four_agent(others: &[ValueMeasure]) -> Result<Option<BridgeRun>, String> {
    assert_eq!(others.len(), 3);
    let mut ms = vec![ValueMeasure::uniform()];
    ms.extend_from_slice(others);
    let ms = &ms[..];
    let quarter = |q: usize| (rat(q as i64, 4), rat(q as i64 + 1, 4));
    let val = |agent: usize, lo: &Rat, hi: &Rat| ms[agent].eval_interval(lo, hi);
    let mut by_b: Vec<(Rat, usize)> = (0..4).map(|q| (val(1, &quarter(q).0, &quarter(q).1), q)).collect();
    by_b.sort();
    if by_b.windows(2).any(|w| w[0].0 == w[1].0) {
        return Ok(None);
    }
    let originals: Vec<Concrete> = by_b
        .iter()
        .enumerate()
        .map(|(j, &(_, q))| Concrete {
            name: (j + 1).to_string(),
            origin: j + 1,
            lo: quarter(q).0,
            hi: quarter(q).1,
            trimmed: false,
        })
        .collect();
    let mut by_c: Vec<(Rat, usize)> = originals.iter().map(|p| (val(2, &p.lo, &p.hi), p.origin)).collect();
    by_c.sort();
    if by_c.windows(2).any(|w| w[0].0 == w[1].0) {
        return Ok(None);
    }
    let c_order: Vec<usize> = by_c.iter().map(|x| x.1).collect();
    let case = four_agent_cases().iter().position(|o| *o == c_order).ok_or("order not among the cases")? + 1;
    let proof = prove_4agent_case(case).map_err(|e| e.to_string())?;
    let mut path = Vec::new();
    let mut node = &proof.root;
    loop {
        path.push(node.branch);
        let step = concrete_branch(ms, &originals, node)?;
        let Some(step) = step else { return Ok(None) };
        match &node.verdict {
            Verdict::Succeeds => {
                step.check_success(ms, node)?;
                return Ok(Some(BridgeRun { case, path }));
            }
            Verdict::MustFail(next) => {
                if !step.breaks(step.y_best) {
                    return Err(format!("case {case}: branch {} predicted to fail but holds", node.branch));
                }
                node = next;
            }
            Verdict::MayFail(cases) => {
                let chosen = &step.table[step.y_best];
                match cases.iter().find(|(a, _)| a.preferred == chosen.name) {
                    None => {
                        step.check_success(ms, node)?;
                        return Ok(Some(BridgeRun { case, path }));
                    }
                    Some((assumption, next)) => {
                        let v = val(node.chooser, &chosen.lo, &chosen.hi);
                        for other in &assumption.others {
                            let p = step
                                .table
                                .iter()
                                .find(|p| p.name == *other)
                                .ok_or_else(|| format!("case {case}: no concrete piece {other}"))?;
                            if val(node.chooser, &p.lo, &p.hi) >= v {
                                return Err(format!("case {case}: assumption '{assumption}' false"));
                            }
                        }
                        if !step.breaks(step.y_best) {
                            return Err(format!("case {case}: assumed case '{assumption}' does not break"));
                        }
                        node = next;
                    }
                }
            }
        }
    }
}

struct Step {
    table: Vec<Concrete>,
    x: usize,
    y: usize,
    x_value: Rat,
    x_best: Vec<usize>,
    y_best: usize,
}

fn concrete_branch(ms: &[ValueMeasure], originals: &[Concrete], node: &ProofNode) -> Result<Option<Step>, String> {
    let (x, k, y) = (node.cutter, node.k, node.chooser);
    let mut table = originals.to_vec();
    let mut ranked: Vec<(Rat, usize)> = table.iter().enumerate().map(|(i, p)| (ms[x].eval_interval(&p.lo, &p.hi), i)).collect();
    ranked.sort();
    ranked.reverse();
    if ranked.windows(2).any(|w| w[0].0 == w[1].0) {
        return Ok(None);
    }
    let target = ranked[k - 1].0.clone();
    let mut best_names = vec![table[ranked[k - 1].1].name.clone()];
    let x_best: Vec<usize> = ranked[..k].iter().map(|r| r.1).collect();
    for &(_, i) in &ranked[..k - 1] {
        let p = &mut table[i];
        let total = ms[x].eval_interval(&p.lo, &p.hi);
        let cut = ms[x]
            .mark_intervals(&[Interval::new(p.lo.clone(), p.hi.clone())], &(total - &target))
            .map_err(|e| e.to_string())?;
        p.lo = cut;
        p.name = format!("{}{}", p.origin, letter(x).to_string().repeat(k - 1));
        p.trimmed = true;
        best_names.push(p.name.clone());
    }
    let mut expected = node.best.clone();
    expected.sort();
    best_names.sort();
    if expected != best_names {
        return Err(format!("best pieces {best_names:?} differ from the proof's {expected:?}"));
    }
    let yv: Vec<Rat> = table.iter().map(|p| ms[y].eval_interval(&p.lo, &p.hi)).collect();
    let top = yv.iter().max().expect("four pieces").clone();
    if yv.iter().filter(|v| **v == top).count() > 1 {
        return Ok(None);
    }
    let y_best = yv.iter().position(|v| *v == top).expect("maximum exists");
    Ok(Some(Step { table, x, y, x_value: target, x_best, y_best }))
}

impl Step {
    /// Concretely, `y` trimming piece `p` leaves `a` or `x` with fewer
    /// than two best pieces.
    fn breaks(&self, p: usize) -> bool {
        let untouched = self.table.iter().enumerate().filter(|(i, q)| !q.trimmed && *i != p).count();
        let x_best = self.x_best.iter().filter(|&&i| i != p).count();
        untouched < 2 || x_best < 2
    }

    /// `y` trims its best piece to its second best; then `a`, `x` and `y`
    /// each have two best pieces and every agent can be matched.
    fn check_success(&self, ms: &[ValueMeasure], node: &ProofNode) -> Result<(), String> {
        let mut table = self.table.clone();
        let yv: Vec<Rat> = table.iter().map(|p| ms[self.y].eval_interval(&p.lo, &p.hi)).collect();
        let mut sorted = yv.clone();
        sorted.sort();
        let second = sorted[2].clone();
        let p = &mut table[self.y_best];
        let total = ms[self.y].eval_interval(&p.lo, &p.hi);
        p.lo = ms[self.y]
            .mark_intervals(&[Interval::new(p.lo.clone(), p.hi.clone())], &(total - &second))
            .map_err(|e| e.to_string())?;
        let mut edges: Vec<BTreeSet<PieceId>> = Vec::new();
        for (agent, m) in ms.iter().enumerate() {
            let v: Vec<Rat> = table.iter().map(|q| m.eval_interval(&q.lo, &q.hi)).collect();
            let best = v.iter().max().expect("four pieces").clone();
            let set: BTreeSet<PieceId> = (0..4).filter(|&i| v[i] == best).map(|i| PieceId(i as u32)).collect();
            let floor = match agent {
                0 => rat(1, 4),
                a if a == self.x => self.x_value.clone(),
                a if a == self.y => second.clone(),
                _ => Rat::zero(),
            };
            if agent != 3 && (set.len() < 2 || best < floor) {
                return Err(format!(
                    "branch {} (case path) leaves {} with {} best piece(s)",
                    node.branch,
                    letter(agent),
                    set.len()
                ));
            }
            edges.push(set);
        }
        if !matching_oracle(&edges) {
            return Err(format!("branch {}: no saturating matching", node.branch));
        }
        let alloc = divide_4_connected(ms, 0, Some(3)).map_err(|e| e.to_string())?;
        if !alloc.is_envy_free() {
            return Err("four-agent division is not envy-free".into());
        }
        Ok(())
    }
}
