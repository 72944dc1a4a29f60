use envyfree::proofsearch::{
    all_branches_fail, check_profile, five_agent_template, four_agent_cases, four_agent_template, parse_template,
    prove_4agent, prove_4agent_case, search_template, FailCheck, ProofDoc, ProofError,
};

const GOLDEN: &str = include_str!("golden/four_agent_proof.txt");

fn known_counterexample() -> Vec<Vec<usize>> {
    vec![vec![1, 2, 3, 4, 5], vec![1, 2, 3, 4, 5], vec![1, 3, 2, 4, 5]]
}

#[test]
fn four_agent_proof_matches_golden_text() {
    let doc = prove_4agent().unwrap();
    let text = doc.render();
    if text != GOLDEN {
        for (i, (got, want)) in text.lines().zip(GOLDEN.lines()).enumerate() {
            assert_eq!(got, want, "first difference at line {}", i + 1);
        }
        panic!("line counts differ: {} vs {}", text.lines().count(), GOLDEN.lines().count());
    }
}

#[test]
fn every_case_renders_as_in_the_whole_proof() {
    for case in 1..=ProofDoc::TOTAL {
        let c = prove_4agent_case(case).unwrap();
        assert_eq!(c.index, case);
        assert!(GOLDEN.contains(&c.render(ProofDoc::TOTAL)), "case {case}");
    }
}

#[test]
fn cases_cover_every_order_of_c_once() {
    let cases = four_agent_cases();
    assert_eq!(cases.len(), 24);
    assert_eq!(cases[0], vec![4, 3, 2, 1]);
    assert_eq!(cases[23], vec![1, 2, 3, 4]);
    let mut sorted = cases.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), 24);
}

#[test]
fn case_seventeen_learns_nesting_relations() {
    let c = prove_4agent_case(17).unwrap();
    assert!(c.render(24).contains("so globally: 4bb<4cc 3bb<3cc ."));
    let globals = c.root.all_globals();
    assert!(globals.contains(&("4bb".into(), "4cc".into())));
    assert!(globals.contains(&("3bb".into(), "3cc".into())));
}

#[test]
fn simple_cases_succeed_with_the_first_branch() {
    for case in [1, 2, 3, 5, 7, 8, 9] {
        let c = prove_4agent_case(case).unwrap();
        assert_eq!(c.root.succeeding(), vec![0], "case {case}");
        assert_eq!(c.root.depth(), 1);
    }
}

#[test]
fn out_of_range_cases_are_rejected() {
    assert!(matches!(prove_4agent_case(0), Err(ProofError::NoSuchCase { got: 0, max: 24 })));
    assert!(matches!(prove_4agent_case(25), Err(ProofError::NoSuchCase { got: 25, .. })));
}

#[test]
fn four_agent_template_is_never_defeated() {
    let report = search_template(4, &four_agent_template(), usize::MAX);
    assert!(report.found.is_none());
    assert_eq!(report.checked, 24);
    assert_eq!(report.holding, 24);
}

#[test]
fn known_counterexample_defeats_every_branch() {
    let template = five_agent_template();
    assert_eq!(template.len(), 36);
    let c = all_branches_fail(5, &known_counterexample(), &template).expect("all branches fail");
    assert_eq!(c.orders, known_counterexample());
    assert_eq!(c.cases.len(), 36);
    assert!(c.cases.iter().all(|l| l.contains("short: ")));
}

#[test]
fn profile_check_respects_its_budget() {
    let template = five_agent_template();
    assert!(matches!(check_profile(5, &known_counterexample(), &template, 1_000), FailCheck::AllFail(_)));
    let ascending = vec![vec![1, 2, 3, 4, 5]; 3];
    assert!(matches!(check_profile(5, &ascending, &template, 50), FailCheck::Undecided));
}

#[test]
fn templates_parse_from_text() {
    let (n, t) = parse_template("# four agents\nb:2 c:2\nc:2 b:2\nb:3 c:2\nc:3 b:2\n").unwrap();
    assert_eq!(n, 4);
    assert_eq!(t, four_agent_template());
    let (n, t) = parse_template("agents: 6\nb:2\n").unwrap();
    assert_eq!((n, t.len()), (6, 1));
    assert_eq!(parse_template("").unwrap(), (5, vec![]));
}

#[test]
fn malformed_templates_report_their_line() {
    for (text, line) in [("b:2\nb2\n", 2), ("a:2\n", 1), ("b:1\n", 1), ("\n\nbb:2\n", 3), ("agents: x\n", 1)] {
        match parse_template(text) {
            Err(ProofError::Template { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}
