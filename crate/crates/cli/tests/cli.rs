use std::path::Path;
use std::process::{Command, Output};

use envyfree::measure::Rat;
use envyfree_cli::report::{parse_intervals, parse_machine, parse_rats};
use envyfree_cli::valuation::Valuation;
use num_traits::Zero;

const UNIFORM3: &str = "agents: 3\nagent A: 0 1 1\nagent B: 0 1 1\nagent C: 0 1 1\n";
const FOUR: &str = "\
# four agents with different tastes
agents: 4
agent Alice: 0 1 1
agent Bob: 0 3 1/4 1/3 1
agent Carl: 0 1/2 1/2 3/2 1
agent Dana: 0 0 2/3 3 1
";

fn envyfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envyfree")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn three_uniform_agents_get_a_third_each() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "u3.txt", UNIFORM3);
    let o = envyfree(&["divide", "--input", &f, "--mode", "connected-3", "--report", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = parse_machine(&stdout(&o));
    for i in 0..3 {
        assert_eq!(kv[&format!("agent.{i}.value")], "1/3");
        assert_eq!(kv[&format!("agent.{i}.envy")], "1/3 1/3 1/3");
    }
    assert_eq!(kv["envy_free"], "true");
}

#[test]
fn four_agent_report_lists_its_guarantees() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    let o = envyfree(&["divide", "--input", &f, "--mode", "connected-4", "--vip", "Carl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for label in ["pieces<=7", "vip>=1/4", "floor>=1/7", "envy=0", "vip: Carl"] {
        assert!(text.contains(label), "missing {label} in\n{text}");
    }
    assert!(!text.contains("VIOLATED"));
}

#[test]
fn machine_report_round_trips_exact_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    let v = Valuation::parse(FOUR, false).unwrap();
    for mode in ["connected-4", "disconnected-4", "entire", "connected-n"] {
        let o = envyfree(&["divide", "--input", &f, "--mode", mode, "--report", "machine"]);
        assert_eq!(o.status.code(), Some(0), "{mode}: {}", stderr(&o));
        let kv = parse_machine(&stdout(&o));
        assert_eq!(kv["mode"], mode);
        let bundles: Vec<_> =
            (0..4).map(|i| parse_intervals(&kv[&format!("agent.{i}.pieces")]).expect("intervals parse")).collect();
        for i in 0..4 {
            let row = parse_rats(&kv[&format!("agent.{i}.envy")]).expect("rationals parse");
            let want: Vec<Rat> = bundles.iter().map(|b| v.measures[i].eval_intervals(b)).collect();
            assert_eq!(row, want, "{mode}: agent {i}");
            let value = parse_rats(&kv[&format!("agent.{i}.value")]).unwrap();
            assert_eq!(value, vec![want[i].clone()]);
        }
        let floor = parse_rats(&kv["floor"]).unwrap().remove(0);
        assert!(floor > Rat::zero());
    }
}

#[test]
fn machine_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    for mode in ["connected-4", "disconnected-4", "entire"] {
        let a = envyfree(&["divide", "--input", &f, "--mode", mode, "--report", "machine"]);
        let b = envyfree(&["divide", "--input", &f, "--mode", mode, "--report", "machine"]);
        assert_eq!(a.stdout, b.stdout, "{mode}");
    }
    let a = envyfree(&["divide", "--seed", "9", "--agents", "4", "--mode", "connected-4", "--report", "machine"]);
    let b = envyfree(&["divide", "--seed", "9", "--agents", "4", "--mode", "connected-4", "--report", "machine"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seeded_valuation_reproduces_the_report() {
    let o = envyfree(&["divide", "--seed", "4", "--agents", "3", "--mode", "connected-3", "--report", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let (valuation, report) = text.split_once("\n\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "seeded.txt", &format!("{valuation}\n"));
    let again = envyfree(&["divide", "--input", &f, "--mode", "connected-3", "--report", "machine"]);
    assert_eq!(stdout(&again), report);
}

#[test]
fn disconnected_n_logs_every_inner_round() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    let o = envyfree(&["divide", "--input", &f, "--mode", "disconnected-n", "--epsilon", "1/10", "--report", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = parse_machine(&stdout(&o));
    assert!(kv["guarantee.0"].starts_with("floor >= 9/40 "));
    assert_eq!(kv["epsilon"], "1/10");
    let rounds = kv.keys().filter(|k| k.starts_with("round.")).count();
    assert!((4..=12).contains(&rounds), "{rounds} rounds");
    let floor = parse_rats(&kv["floor"]).unwrap().remove(0);
    assert!(floor >= Rat::new(9.into(), 40.into()));
}

#[test]
fn entire_mode_leaves_nothing_of_value() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    let o = envyfree(&["divide", "--input", &f, "--mode", "entire", "--report", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = parse_machine(&stdout(&o));
    let v = Valuation::parse(FOUR, false).unwrap();
    let rest = parse_intervals(&kv["remainder"]).unwrap();
    for m in &v.measures {
        assert!(m.eval_intervals(&rest).is_zero());
    }
    assert!(kv.values().any(|l| l.starts_with("VIP rounds: ")));
    assert!(kv.iter().any(|(k, l)| k.starts_with("guarantee.") && l.starts_with("rounds <= ")));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let u3 = write(dir.path(), "u3.txt", UNIFORM3);
    let bad = write(dir.path(), "bad.txt", "agents: 1\nagent A: 0 x 1\n");
    let heavy = write(dir.path(), "heavy.txt", "agents: 1\nagent A: 0 3 1\n");
    let missing = dir.path().join("none.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["divide", "--input", missing.to_str().unwrap(), "--mode", "connected-3"],
        vec!["divide", "--input", &bad, "--mode", "connected-3"],
        vec!["divide", "--input", &heavy, "--mode", "entire"],
        vec!["divide", "--input", &u3, "--mode", "connected-4"],
        vec!["divide", "--input", &u3, "--mode", "disconnected-n"],
        vec!["divide", "--input", &u3, "--mode", "disconnected-n", "--epsilon", "1/0"],
        vec!["divide", "--input", &u3, "--mode", "disconnected-n", "--epsilon", "2"],
        vec!["divide", "--input", &u3, "--mode", "sideways"],
        vec!["divide", "--input", &u3, "--mode", "connected-n", "--vip", "Zed"],
        vec!["divide", "--mode", "connected-3"],
        vec!["prove4", "--case", "0"],
        vec!["prove4", "--case", "25"],
        vec!["search5", "--profile", "12345/12345"],
        vec!["search5", "--profile", "12345/12345/11111"],
    ];
    for args in cases {
        let o = envyfree(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let tpl = write(dir.path(), "bad_template.txt", "b:2 c:x\n");
    let o = envyfree(&["search5", "--template-file", &tpl]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("template line 1"));
}

#[test]
fn normalize_flag_rescales_densities() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "heavy.txt", "agents: 3\nagent A: 0 3 1\nagent B: 0 2 1\nagent C: 0 5 1\n");
    let o = envyfree(&["divide", "--input", &f, "--mode", "connected-3", "--normalize", "--report", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(parse_machine(&stdout(&o))["floor"], "1/3");
}

#[test]
fn help_documents_every_flag() {
    let top = stdout(&envyfree(&["--help"]));
    for cmd in ["divide", "prove4", "search5"] {
        assert!(top.contains(cmd), "{cmd} missing from\n{top}");
    }
    let flags: [(&str, &[&str]); 3] = [
        ("divide", &["--input", "--mode", "--epsilon", "--vip", "--report", "--normalize", "--seed", "--agents"]),
        ("prove4", &["--case"]),
        ("search5", &["--template-file", "--profile", "--budget"]),
    ];
    for (cmd, list) in flags {
        let o = envyfree(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        for flag in list {
            assert!(text.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    let divide = stdout(&envyfree(&["divide", "--help"]));
    for mode in [
        "connected-n",
        "connected-3",
        "connected-4",
        "connected-n-improved",
        "disconnected-4",
        "disconnected-n",
        "entire",
    ] {
        assert!(divide.contains(mode), "mode {mode} undocumented");
    }
}

#[test]
fn prove4_prints_the_whole_proof_or_one_case() {
    let o = envyfree(&["prove4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), include_str!("../../core/tests/golden/four_agent_proof.txt"));
    let o = envyfree(&["prove4", "--case", "17"]);
    let text = stdout(&o);
    assert!(text.starts_with("CASE 17 OF 24 : c's order is 2<1<4<3 :"));
    assert!(text.contains("4bb<4cc 3bb<3cc"));
    assert!(!text.contains("CASE 18"));
}

#[test]
fn search5_confirms_the_known_counterexample() {
    let o = envyfree(&["search5", "--profile", "12345/12345/13245"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("all 36 branches fail:"));
    assert!(text.contains("d's order is 1<3<2<4<5"));
}

#[test]
fn search5_with_the_four_agent_template_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let tpl = write(dir.path(), "four.txt", "# the four-agent algorithm\nb:2 c:2\nb:3 c:2\nc:2 b:2\nc:3 b:2\n");
    let o = envyfree(&["search5", "--template-file", &tpl]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("template: 4 branches, 4 agents"));
    assert!(text.contains("profiles checked: 24"));
    assert!(text.ends_with("no counterexample\n"));
}

#[test]
fn search5_with_an_empty_template_fails_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let tpl = write(dir.path(), "empty.txt", "");
    let o = envyfree(&["search5", "--template-file", &tpl]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("profiles checked: 1\n"));
    assert!(text.contains("counterexample, all 0 branches fail:"));
}

#[test]
fn connected_n_piece_count_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "four.txt", FOUR);
    let o = envyfree(&["divide", "--input", &f, "--mode", "connected-n", "--report", "machine"]);
    let kv = parse_machine(&stdout(&o));
    assert_eq!(kv["pieces"], "8");
    assert!(kv.values().any(|g| g == "pieces = 8 8"));
}
