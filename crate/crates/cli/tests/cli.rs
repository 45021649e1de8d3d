use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_preround")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn file(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn sub(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const K22: &str = "k 2\n1 3\n1 4\n2 3\n2 4\n";
const SAT_PAIR: &str = "p cnf 2 2\n1 2 0\n-1 -2 0\n";

#[test]
fn plurality_winner() {
    let dir = TempDir::new().unwrap();
    let e = file(&dir, "tiny.vote", "candidates: a b c\n2: a b c\n1: c b a\n");
    let out = run(&["winner", "--protocol", "plurality", &e]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "winner a\n");
}

#[test]
fn dpre_winner_uses_schedule() {
    let dir = TempDir::new().unwrap();
    let e = file(&dir, "e.vote", "candidates: a b c d\n2: a c b d\n1: d b a c\n");
    let sched = file(&dir, "s.sched", "pair a b\npair c d\n");
    let out = run(&["winner", "--protocol", "stv", "--preround", "dpre", "--schedule", &sched, &e]);
    assert_eq!(stdout(&out), "winner a\n");
}

#[test]
fn rpre_winner_probabilities_on_cycle() {
    let dir = TempDir::new().unwrap();
    let e = file(&dir, "cycle.vote", "candidates: a b c\n1: a b c\n1: b c a\n1: c a b\n");
    let out = run(&["winner", "--protocol", "borda", "--preround", "rpre", &e]);
    assert_eq!(stdout(&out), "a 1/3\nb 1/3\nc 1/3\n");
}

#[test]
fn tiebreak_list_decides_ties() {
    let dir = TempDir::new().unwrap();
    let e = file(&dir, "t.vote", "candidates: a b\n1: a b\n1: b a\n");
    let out = run(&["winner", "--protocol", "plurality", "--tiebreak", "b,a", &e]);
    assert_eq!(stdout(&out), "winner b\n");
}

#[test]
fn schedules_count_and_list() {
    let out = run(&["schedules", "--candidates", "9"]);
    assert_eq!(stdout(&out), "schedules: 945\n");
    let out = run(&["schedules", "--candidates", "3", "--list"]);
    assert_eq!(
        stdout(&out),
        "schedules: 3\npair c2 c3; bye c1\npair c1 c3; bye c2\npair c1 c2; bye c3\n"
    );
}

#[test]
fn plain_manipulation_with_witness() {
    let dir = TempDir::new().unwrap();
    let e = file(&dir, "e.vote", "candidates: a b c\n1: a b c\n1: b a c\n");
    let out = run(&["manipulate", "--mode", "plain", "--protocol", "plurality", "--prefer", "b", &e]);
    assert_eq!(stdout(&out), "yes 1\nwitness: b a c\n");
    let out = run(&["manipulate", "--mode", "plain", "--protocol", "plurality", "--prefer", "c", "--expect", "no", &e]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "no 0\n");
}

#[test]
fn rpre_threshold_verdicts_and_expect() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "g.bg", K22);
    let o = sub(&dir, "out");
    assert_eq!(stdout(&run(&["reduce", "matching", &g, "-o", s(&o)])), "candidates: 5 votes: 104\n");
    let e = o.join("election.vote");
    let base = ["manipulate", "--mode", "rpre", "--protocol", "maximin", "--prefer", "p", "--threshold"];
    let yes = run(&[&base[..], &["2/15", s(&e)]].concat());
    assert!(stdout(&yes).starts_with("yes 2/15\n"));
    let no = run(&[&base[..], &["1/7", "--expect", "yes", s(&e)]].concat());
    assert!(stdout(&no).starts_with("no 2/15\n"));
    assert_eq!(no.status.code(), Some(2));
}

#[test]
fn reduce_and_verify_dpre() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "f.cnf", SAT_PAIR);
    let o = sub(&dir, "out");
    let out = run(&["reduce", "sat", "--protocol", "plurality", "--target", "dpre", &f, "-o", s(&o)]);
    assert_eq!(stdout(&out), "candidates: 10 votes: 34\n");
    for name in ["election.vote", "roles.map", "schedule.sched", "formula.cnf"] {
        assert!(o.join(name).exists(), "{name}");
    }
    let out = run(&["verify", "dpre", "--protocol", "plurality", s(&o)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1b PASS (exhaustive)\n1a PASS (exhaustive)\n");

    let dpre = ["manipulate", "--mode", "dpre", "--protocol", "plurality", "--prefer", "p", "--schedule"];
    let sched = o.join("schedule.sched");
    let roles = o.join("roles.map");
    let e = o.join("election.vote");
    let out = run(&[&dpre[..], &[s(&sched), "--roles", s(&roles), "--expect", "yes", s(&e)]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn verify_rpre_reports_matching_ratio() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "g.bg", K22);
    let o = sub(&dir, "out");
    run(&["reduce", "matching", &g, "-o", s(&o)]);
    let out = run(&["verify", "rpre", "--protocol", "stv", s(&o)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("probability 2/15 = m_B/e PASS (exhaustive)\n"));
}

#[test]
fn corrupted_election_fails_with_counterexample_files() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "f.cnf", SAT_PAIR);
    let o = sub(&dir, "out");
    run(&["reduce", "sat", "--protocol", "plurality", &f, "-o", s(&o)]);
    // Flip the literal pair of variable 1 in the first ballot line.
    let path = o.join("election.vote");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let i = lines.iter().position(|l| !l.starts_with("candidates") && l.contains("x1+ x1-")).unwrap();
    lines[i] = lines[i].replace("x1+ x1-", "x1- x1+");
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let out = run(&["verify", "dpre", "--protocol", "plurality", s(&o)]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.starts_with("1b FAIL"), "{text}");
    assert!(o.join("report/1b.txt").exists());
    assert!(o.join("report/1b.vote").exists());
}

#[test]
fn ipre_reduce_verify_and_plan() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "f.cnf", "c xy-split 1\np cnf 2 2\n1 0\n2 0\n");
    let o = sub(&dir, "out");
    let out = run(&["reduce", "sat", "--protocol", "plurality", "--target", "ipre", &f, "-o", s(&o)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("candidates: 12 votes: 34\n"));
    let out = run(&["verify", "ipre", "--protocol", "plurality", "--completions", "5", s(&o)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("value 1/2 = stochastic SAT value PASS"));

    let seed = o.join("seed.ipre");
    let e = o.join("election.vote");
    let out = run(&[
        "manipulate", "--mode", "ipre", "--protocol", "plurality", "--prefer", "p", "--threshold", "1/2", "--seed",
        s(&seed), s(&e),
    ]);
    let text = stdout(&out);
    assert!(text.starts_with("yes 1/2\n"), "{text}");
    assert!(text.contains("draws=1 -> answer=1\n"), "{text}");
}

#[test]
fn usage_and_input_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["winner", "--protocol", "copeland", "x.vote"]).status.code(), Some(1));
    assert_eq!(run(&["winner", "--protocol", "borda", "/nonexistent/e.vote"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let bad = file(&dir, "bad.cnf", "p cnf 1 1\n1 -1 0\n");
    let out = run(&["reduce", "sat", "--protocol", "borda", &bad, "-o", s(&sub(&dir, "o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let e = file(&dir, "e.vote", "candidates: a b c\n1: a b\n");
    assert_eq!(run(&["winner", "--protocol", "borda", &e]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bound_refusal_exits_1() {
    let dir = TempDir::new().unwrap();
    let names: Vec<String> = (0..12).map(|i| format!("c{i}")).collect();
    let e = file(&dir, "big.vote", &format!("candidates: {0}\n1: {0}\n", names.join(" ")));
    let out = run(&["manipulate", "--mode", "plain", "--protocol", "borda", "--prefer", "c3", &e]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("search bound"));
}

#[test]
fn sampled_verification_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "f.cnf", "p cnf 3 3\n1 2 0\n-1 3 0\n-2 -3 0\n");
    let o = sub(&dir, "out");
    run(&["reduce", "sat", "--protocol", "borda", &f, "-o", s(&o)]);
    let args = ["--rng-seed", "4", "verify", "dpre", "--protocol", "borda", "--mode", "sampled:25", s(&o)];
    let a = run(&args);
    assert_eq!(a.stdout, run(&args).stdout);
    assert!(stdout(&a).contains("sampled n=25 seed=4"), "{}", stdout(&a));
}
