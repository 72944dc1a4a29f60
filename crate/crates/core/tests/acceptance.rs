//! End-to-end acceptance run: one line per criterion, exact comparisons,
//! wall-clock limits pinned below. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use envyfree::allocation::Allocation;
use envyfree::connected::{
    divide_3_connected, divide_4_connected, divide_n_connected, divide_n_connected_improved, improved_guarantee,
};
use envyfree::entirecake::{divide_entire_traced, entire_round_bound, SolutionPlan};
use envyfree::measure::{int, overlaps, rat, Interval, Rat, ValueMeasure};
use envyfree::prefgraph::{build_graph, hall_check, max_matching};
use envyfree::proofsearch::{all_branches_fail, five_agent_template, prove_4agent, search_template, PROFILE_NODE_BUDGET};
use envyfree::queries::stick_division;
use envyfree::reductions::{
    divide_4_disconnected, divide_n_disconnected, strong_reduction, strong_round_bound, strong_rounds,
    vip_share_denominator, QUERY_ENVELOPE_C,
};
use envyfree::{Piece, PieceId};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use common::{hall_violations_oracle, matching_oracle, random_profile, realize_four_agent, rng, stick_oracle};

/// Upper bound on primitive queries of one four-agent connected division.
const FOUR_AGENT_QUERY_CAP: u64 = 200;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Recomputes every value from the measures and checks envy-freeness and
/// that bundles and remainder are pairwise disjoint subsets of the cake.
fn audit(ms: &[ValueMeasure], a: &Allocation) -> Result<Vec<Rat>, String> {
    let n = ms.len();
    ensure(a.bundles.len() == n, || format!("{} bundles for {n} agents", a.bundles.len()))?;
    let mut own = Vec::with_capacity(n);
    for (i, m) in ms.iter().enumerate() {
        let mine = m.eval_intervals(&a.bundles[i]);
        for (j, bundle) in a.bundles.iter().enumerate() {
            let theirs = m.eval_intervals(bundle);
            ensure(theirs <= mine, || format!("agent {i} envies agent {j}: {theirs} > {mine}"))?;
        }
        own.push(mine);
    }
    let mut parts: Vec<&[Interval]> = a.bundles.iter().map(Vec::as_slice).collect();
    parts.push(&a.remainder);
    for (x, p) in parts.iter().enumerate() {
        for iv in p.iter() {
            ensure(iv.lo >= Rat::zero() && iv.hi <= Rat::one() && iv.lo <= iv.hi, || format!("bad interval {iv:?}"))?;
        }
        for q in &parts[x + 1..] {
            ensure(!overlaps(p, q), || "overlapping bundles".to_string())?;
        }
    }
    Ok(own)
}

fn min(v: &[Rat]) -> Rat {
    v.iter().min().cloned().unwrap_or_else(Rat::zero)
}

fn criterion_1() -> Outcome {
    let mut r = rng(101);
    for i in 0..500 {
        let ms = random_profile(&mut r, 3, 8);
        let a = divide_3_connected(&ms).map_err(|e| format!("profile {i}: {e}"))?;
        let v = audit(&ms, &a)?;
        ensure(min(&v) >= rat(1, 3), || format!("profile {i}: value {} < 1/3", min(&v)))?;
        ensure(a.is_connected(), || format!("profile {i}: disconnected bundle"))?;
    }
    Ok("500 profiles, zero envy, all >= 1/3".into())
}

fn criterion_2() -> Outcome {
    let mut r = rng(102);
    let mut worst = 0;
    for i in 0..500 {
        let ms = random_profile(&mut r, 4, 8);
        let vip = i % 4;
        let a = divide_4_connected(&ms, vip, None).map_err(|e| format!("profile {i}: {e}"))?;
        let v = audit(&ms, &a)?;
        ensure(min(&v) >= rat(1, 7), || format!("profile {i}: value {} < 1/7", min(&v)))?;
        ensure(v[vip] >= rat(1, 4), || format!("profile {i}: vip value {} < 1/4", v[vip]))?;
        ensure(a.piece_count <= 7, || format!("profile {i}: {} pieces", a.piece_count))?;
        ensure(a.is_connected(), || format!("profile {i}: disconnected bundle"))?;
        let q = a.log.total().primitive();
        worst = worst.max(q);
        ensure(q <= FOUR_AGENT_QUERY_CAP, || format!("profile {i}: {q} queries > {FOUR_AGENT_QUERY_CAP}"))?;
    }
    Ok(format!("500 profiles, max {worst} queries (cap {FOUR_AGENT_QUERY_CAP})"))
}

fn criterion_3() -> Outcome {
    let mut r = rng(103);
    for n in 2..=9usize {
        let runs = if n <= 6 { 20 } else { 4 };
        for i in 0..runs {
            let ms = random_profile(&mut r, n, 6);
            let a = divide_n_connected(&ms, 0).map_err(|e| format!("n={n} profile {i}: {e}"))?;
            let v = audit(&ms, &a)?;
            let floor = Rat::one() / int(1 << (n - 1));
            ensure(min(&v) >= floor, || format!("n={n}: value {} < {floor}", min(&v)))?;
            let vip = Rat::one() / int((1 << (n - 2)) + 1);
            ensure(v[0] >= vip, || format!("n={n}: vip {} < {vip}", v[0]))?;
            ensure(a.piece_count == 1 << (n - 1), || format!("n={n}: {} pieces", a.piece_count))?;
            ensure(a.is_connected(), || format!("n={n}: disconnected bundle"))?;
        }
    }
    for n in 4..=7usize {
        // (3/4) 2^(n-1) + 1 = 3 * 2^(n-3) + 1
        let bound = Rat::one() / int(3 * (1 << (n - 3)) + 1);
        ensure(improved_guarantee(n) == bound, || format!("n={n}: improved bound {}", improved_guarantee(n)))?;
        for i in 0..6 {
            let ms = random_profile(&mut r, n, 6);
            let a = divide_n_connected_improved(&ms, 0).map_err(|e| format!("improved n={n} profile {i}: {e}"))?;
            let v = audit(&ms, &a)?;
            ensure(min(&v) >= bound, || format!("improved n={n}: value {} < {bound}", min(&v)))?;
        }
    }
    Ok("n=2..9 and improved n=4..7 meet their floors".into())
}

fn criterion_4() -> Outcome {
    let mut r = rng(104);
    for i in 0..200 {
        let ms = random_profile(&mut r, 4, 8);
        let a = divide_4_disconnected(&ms).map_err(|e| format!("profile {i}: {e}"))?;
        let v = audit(&ms, &a)?;
        ensure(min(&v) >= rat(1, 4), || format!("profile {i}: value {} < 1/4", min(&v)))?;
    }
    Ok("200 profiles, zero envy, all >= 1/4".into())
}

/// `ceil(m ln(1/eps) / n)` in floating point, refusing values too close to
/// an integer to decide.
fn float_rounds(n: usize, m: usize, eps: &Rat) -> Result<usize, String> {
    let x = m as f64 * (1.0 / eps.to_f64().expect("finite")).ln() / n as f64;
    ensure((x - x.round()).abs() > 1e-9, || format!("ceiling of {x} is too close to call"))?;
    Ok(x.ceil() as usize)
}

fn criterion_5() -> Outcome {
    let mut r = rng(105);
    let mut worst_ratio = 0f64;
    for n in [4usize, 5] {
        let m = vip_share_denominator(n);
        for eps in [rat(1, 10), rat(1, 100)] {
            let planned = strong_rounds(n, m, &eps).map_err(|e| e.to_string())?;
            let expected = float_rounds(n, m, &eps)?;
            ensure(planned == expected, || format!("n={n} eps={eps}: {planned} rounds, expected {expected}"))?;
            let envelope = QUERY_ENVELOPE_C as f64 * 4f64.powi(n as i32) * (1.0 / eps.to_f64().unwrap()).ln();
            for i in 0..3 {
                let ms = random_profile(&mut r, n, 8);
                let s = strong_reduction(&ms, 0, &eps).map_err(|e| format!("n={n} profile {i}: {e}"))?;
                audit(&ms, &s)?;
                let done_early = s.remainder.is_empty();
                ensure(s.rounds.len() == planned || done_early, || {
                    format!("n={n} eps={eps}: {} rounds run, {planned} planned", s.rounds.len())
                })?;
                for tr in &s.rounds {
                    let bound = strong_round_bound(n, m, tr.t);
                    let q = Rat::one() - Rat::new(n.into(), m.into());
                    let own = (Rat::one() - num_traits::pow(q, tr.t)) / int(n as i64);
                    ensure(bound == own, || format!("round bound formula differs at t={}", tr.t))?;
                    ensure(tr.cumulative[0] >= bound, || {
                        format!("n={n} eps={eps} round {}: vip {} < {bound}", tr.t, tr.cumulative[0])
                    })?;
                }
                let final_floor = (Rat::one() - &eps) / int(n as i64);
                ensure(s.values()[0] >= final_floor, || format!("n={n}: vip {} < {final_floor}", s.values()[0]))?;

                let a = divide_n_disconnected(&ms, &eps).map_err(|e| format!("n={n} profile {i}: {e}"))?;
                let v = audit(&ms, &a)?;
                ensure(min(&v) >= final_floor, || format!("n={n} eps={eps}: value {} < {final_floor}", min(&v)))?;
                let q = a.log.total().primitive() as f64;
                ensure(q <= envelope, || format!("n={n} eps={eps}: {q} queries > envelope {envelope:.0}"))?;
                worst_ratio = worst_ratio.max(q / envelope * QUERY_ENVELOPE_C as f64);
            }
        }
    }
    Ok(format!("n=4,5 eps=1/10,1/100; worst queries/(4^n ln(1/eps)) = {worst_ratio:.2} <= c = {QUERY_ENVELOPE_C}"))
}

fn criterion_6() -> Outcome {
    let doc = prove_4agent().map_err(|e| e.to_string())?;
    let text = doc.render();
    let golden = include_str!("golden/four_agent_proof.txt");
    ensure(text == golden, || "proof text differs from the golden file".into())?;
    let cases = text.lines().filter(|l| l.starts_with("CASE ")).count();
    ensure(cases == 24, || format!("{cases} cases"))?;
    ensure(text.trim_end().ends_with("Q.E.D!"), || "missing Q.E.D!".into())?;
    let case17 = text.split("CASE 17 OF 24").nth(1).and_then(|s| s.split("CASE 18").next()).unwrap_or("");
    ensure(case17.contains("4bb<4cc 3bb<3cc"), || "case 17 lacks its global relations".into())?;
    Ok("24 cases, golden text identical".into())
}

fn criterion_7() -> Outcome {
    let template = five_agent_template();
    let report = search_template(5, &template, PROFILE_NODE_BUDGET);
    let found = report.found.ok_or("no counterexample found")?;
    let known = vec![vec![1, 2, 3, 4, 5], vec![1, 2, 3, 4, 5], vec![1, 3, 2, 4, 5]];
    ensure(found.orders == known, || format!("first counterexample is {:?}", found.orders))?;
    let verified = all_branches_fail(5, &known, &template).ok_or("known counterexample not confirmed")?;
    ensure(verified.cases.len() == template.len(), || "not every branch reported".into())?;
    Ok(format!(
        "{} branches; counterexample at profile {} ({} undecided before it); known counterexample confirmed",
        template.len(),
        report.checked,
        report.undecided.len()
    ))
}

fn letter_index(c: char) -> usize {
    (c as u8 - b'A') as usize
}

fn criterion_8() -> Outcome {
    let mut r = rng(108);
    let mut sequences = 0;
    for i in 0..150 {
        let n = 2 + i % 3;
        let ms = random_profile(&mut r, n, 8);
        let out = divide_entire_traced(vec![Interval::unit()], &ms).map_err(|e| format!("n={n} profile {i}: {e}"))?;
        let a = &out.allocation;
        audit(&ms, a)?;
        let covered: Rat = a.bundles.iter().flatten().map(Interval::len).sum();
        ensure(covered == Rat::one(), || format!("n={n} profile {i}: bundles cover {covered}"))?;
        for (j, m) in ms.iter().enumerate() {
            let left = m.eval_intervals(&a.remainder);
            ensure(left.is_zero(), || format!("n={n} profile {i}: agent {j} values the remainder at {left}"))?;
        }
        let bound = entire_round_bound(n);
        ensure(out.rounds <= bound, || format!("n={n}: {} rounds > {bound}", out.rounds))?;
        if n == 3 {
            // A cuts three equal pieces, B trims one, the last agent is C.
            let first = out.events.first().ok_or("no events")?;
            ensure(first.starts_with("round 1: vip A last C; A:Equalize(3) cuts=2, B:Equalize*(2)"), || {
                format!("profile {i}: {first}")
            })?;
            ensure(out.rounds == 1, || format!("profile {i}: {} rounds", out.rounds))?;
            if let SolutionPlan::Sequence { cutter, order } = &out.plan {
                // The holder of the trimmed piece picks first, A second, the
                // remaining agent cut the trimmings and picks last.
                let holder = first
                    .split("significant ")
                    .nth(1)
                    .and_then(|s| s.chars().next())
                    .map(letter_index)
                    .ok_or("no significant piece")?;
                ensure(order.len() == 2 && order[0] == 0 && order[1] == holder, || {
                    format!("profile {i}: picking order {order:?}, trimmed piece held by {holder}")
                })?;
                ensure(*cutter != 0 && *cutter != holder, || format!("profile {i}: cutter {cutter}"))?;
                sequences += 1;
            }
        }
    }
    ensure(sequences >= 10, || format!("only {sequences} three-agent runs divided the trimmings"))?;
    Ok(format!("150 profiles n=2..4, remainder worthless, {sequences} three-agent trimmings divided"))
}

fn criterion_9() -> Outcome {
    let mut r = rng(109);
    for i in 0..300 {
        let len = r.gen_range(1..=6);
        let lengths: Vec<Rat> = (0..len).map(|_| rat(r.gen_range(1..=40), r.gen_range(1..=12))).collect();
        let k = r.gen_range(1..=7);
        let got = stick_division(&lengths, k).map_err(|e| e.to_string())?;
        let want = stick_oracle(&lengths, k);
        ensure(got == want, || format!("sticks {i}: {got} != {want}"))?;
    }
    for i in 0..300 {
        let agents = r.gen_range(1..=6);
        let pieces = r.gen_range(1..=7);
        let ms = random_profile(&mut r, agents, 4);
        let cuts: BTreeSet<i64> = (0..pieces - 1).map(|_| r.gen_range(1..24)).collect();
        let mut bounds = vec![Rat::zero()];
        bounds.extend(cuts.iter().map(|&c| rat(c, 24)));
        bounds.push(Rat::one());
        let table: Vec<Piece> = bounds
            .windows(2)
            .enumerate()
            .map(|(j, w)| Piece::new(PieceId(j as u32), vec![Interval::new(w[0].clone(), w[1].clone())]))
            .collect();
        let g = build_graph(&table, &ms);
        let all = hall_violations_oracle(&g);
        let minimal: Vec<BTreeSet<usize>> =
            all.iter().filter(|s| !all.iter().any(|t| t != *s && t.is_subset(s))).cloned().collect();
        let mut got = hall_check(&g);
        got.sort();
        let mut want = minimal;
        want.sort();
        ensure(got == want, || format!("graph {i}: Hall violations {got:?} != {want:?}"))?;
        let exists = matching_oracle(&g.edges);
        match max_matching(&g) {
            Ok(m) => {
                ensure(exists, || format!("graph {i}: matching reported where none exists"))?;
                let distinct: BTreeSet<_> = m.assigned.iter().collect();
                ensure(distinct.len() == agents, || format!("graph {i}: matching reuses a piece"))?;
                for (a, p) in m.assigned.iter().enumerate() {
                    ensure(g.edges[a].contains(p), || format!("graph {i}: agent {a} matched off its edges"))?;
                }
            }
            Err(_) => ensure(!exists, || format!("graph {i}: matching missed"))?,
        }
        ensure(exists == want.is_empty(), || format!("graph {i}: Hall and matching disagree"))?;
    }
    let mut r = rng(41);
    let mut realized = 0;
    for _ in 0..400 {
        let ms = random_profile(&mut r, 3, 8);
        if realize_four_agent(&ms)?.is_some() {
            realized += 1;
        }
    }
    ensure(realized >= 20, || format!("only {realized} realized profiles"))?;
    Ok(format!("300 stick instances, 300 graphs, {realized} concrete proof paths"))
}

fn main() -> ExitCode {
    let criteria: [(fn() -> Outcome, Duration); 9] = [
        (criterion_1, Duration::from_secs(10)),
        (criterion_2, Duration::from_secs(10)),
        (criterion_3, Duration::from_secs(30)),
        (criterion_4, Duration::from_secs(20)),
        (criterion_5, Duration::from_secs(60)),
        (criterion_6, Duration::from_secs(5)),
        (criterion_7, Duration::from_secs(60)),
        (criterion_8, Duration::from_secs(60)),
        (criterion_9, Duration::from_secs(30)),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (run, limit)) in criteria.iter().enumerate() {
        let number = i + 1;
        if only.is_some_and(|o| o != number) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let line = match outcome {
            Ok(detail) if took <= *limit => format!("PASS {detail}"),
            Ok(detail) => format!("FAIL over time limit {limit:?}: {detail}"),
            Err(e) => format!("FAIL {e}"),
        };
        if line.starts_with("FAIL") {
            failed += 1;
        }
        println!("criterion {number}: {line} [{:.2}s]", took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
