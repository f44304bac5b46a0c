use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polycsp::Digraph;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycsp")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycsp")).args(args).env(key, val).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn check(file: &Path, cond: &str, extra: &[&str]) -> Output {
    let mut args = vec!["check", file.to_str().unwrap(), cond];
    args.extend(extra);
    run(&args)
}

/// Splits `gen` output into edge-list blocks.
fn blocks(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.split_whitespace().count() == 1 {
            out.push(String::new());
        }
        let cur = out.last_mut().unwrap();
        cur.push_str(line);
        cur.push('\n');
    }
    out
}

/// Data rows of a classify CSV, without comments and header.
fn records(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_string).collect()
}

#[test]
fn cycles_subcommands() {
    let line = |args: &[&str]| stdout(&run(args)).trim().to_string();
    assert_eq!(line(&["cycles", "decompose", "6,20"]), "2 | 3,5");
    assert_eq!(line(&["cycles", "ppleq", "2,3,5", "6,20,15"]), "true");
    assert_eq!(line(&["cycles", "ppleq", "2,15", "6,20,15"]), "false");
    assert_eq!(line(&["cycles", "implies", "2", "4"]), "true");
    assert_eq!(line(&["cycles", "meet", "2", "3"]), "2,3");
    assert_eq!(line(&["cycles", "join", "2", "3"]), "6");
    assert_eq!(line(&["cycles", "satisfies", "10", "2,5"]), "true");
    assert_eq!(line(&["cycles", "squarefree", "6,20"]), "3,10");
    assert_eq!(code(&run(&["cycles", "meet", "2,x", "3"])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn check_verdicts_and_exit_codes() {
    let o = check(&fixture("trees/tree_d.txt"), "KK(5)", &[]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("Yes", 0));
    let o = check(&fixture("small/c2.txt"), "Maltsev", &[]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("Yes", 0));
    let o = check(&fixture("small/c3.txt"), "Sigma(3)", &[]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("No", 1));
    let o = check(&fixture("small/p2.txt"), "Majority", &["--levelwise"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("Inconclusive", 2));
    let o = check(&fixture("trees/tree_d.txt"), "J(3)", &["--levelwise"]);
    assert_eq!((stdout(&o).trim(), code(&o)), ("No", 1));
}

#[test]
fn errors_exit_three() {
    let o = check(&fixture("small/c3.txt"), "Frobnicate", &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(code(&check(Path::new("/nonexistent/graph.txt"), "KMM", &[])), 3);
    assert_eq!(code(&check(&fixture("small/c3.txt"), "TS(2)", &["--levelwise"])), 3);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "3\n0 7\n").unwrap();
    assert_eq!(code(&check(&bad, "KMM", &[])), 3);
}

#[test]
fn witness_is_a_symmetric_polymorphism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let o = check(&fixture("small/c3.txt"), "Sigma(2)", &["--witness", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(&path).unwrap();
    let mut f = std::collections::BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let nums: Vec<usize> = rec.iter().skip(1).map(|s| s.parse().unwrap()).collect();
        f.insert((nums[0], nums[1]), nums[2]);
    }
    assert_eq!(f.len(), 9);
    let c3 = Digraph::cycle(3);
    for (&(a, b), &v) in &f {
        assert_eq!(f[&(b, a)], v);
        assert!(c3.has_edge(v, f[&((a + 1) % 3, (b + 1) % 3)]));
    }
}

#[test]
fn gen_counts() {
    let count = |args: &[&str]| stdout(&run(args)).trim().parse::<usize>().unwrap();
    assert_eq!(count(&["gen", "12", "--cores-only", "--count-only"]), 226);
    assert_eq!(count(&["gen", "6", "--count-only"]), 91);
    let cycles = polycsp::tree_gen::generate_balanced_cycles(8).unwrap().len();
    assert_eq!(count(&["gen", "8", "--cycles", "--count-only"]), cycles);
    let text = stdout(&run(&["gen", "9", "--cores-only"]));
    let trees: Vec<Digraph> = blocks(&text).iter().map(|b| Digraph::parse(b).unwrap()).collect();
    assert_eq!(trees.len(), 15);
    assert!(trees.iter().all(|t| t.n() == 9 && t.is_tree()));
    assert_eq!(code(&run(&["gen", "0"])), 3);
}

#[test]
fn classify_matches_per_tree_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&run(&["classify", "7", "-c", "Sigma(2)"]));
    assert!(out.starts_with("# polycsp classify v1\ncode,n,Sigma(2)\n"));
    let rows = records(&out);
    assert_eq!(rows.len(), 3);
    let yes_rows = rows.iter().filter(|r| r.ends_with(",Yes")).count();
    assert!(out.contains(&format!("# summary Sigma(2) yes={yes_rows} no={} inconclusive=0", 3 - yes_rows)));

    let mut per_tree = 0;
    for (i, b) in blocks(&stdout(&run(&["gen", "7", "--cores-only"]))).iter().enumerate() {
        let p = dir.path().join(format!("t{i}.txt"));
        std::fs::write(&p, b).unwrap();
        let o = check(&p, "Sigma(2)", &[]);
        per_tree += usize::from(code(&o) == 0);
    }
    assert_eq!(per_tree, yes_rows);
}

#[test]
fn classify_output_is_deterministic() {
    let one = stdout(&run(&["classify", "10", "-c", "HM(2),Sigma(2)", "--parallel", "1"]));
    let two = stdout(&run(&["classify", "10", "-c", "HM(2)", "Sigma(2)", "--parallel", "2"]));
    assert_eq!(one, two);
    let rows = records(&one);
    assert_eq!(rows.len(), 36);
    let codes: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert!(codes.windows(2).all(|w| w[0] < w[1]));
    let timed = stdout(&run(&["classify", "8", "-c", "KMM", "--timing"]));
    assert!(timed.lines().nth(1).unwrap().ends_with(",millis"));
}

#[test]
fn budget_and_resume() {
    let args = ["classify", "11", "-c", "Sigma(2)"];
    let full = stdout(&run(&args));
    let partial = run_env(&args, "POLYCSP_BUDGET_SECS", "0");
    assert_eq!(code(&partial), 4);
    let text = stdout(&partial);
    let token = text.lines().find_map(|l| l.strip_prefix("# resume ")).unwrap().to_string();
    let first = records(&text);
    assert!(!first.is_empty() && first.len() < 85);

    let mut rest_args = args.to_vec();
    rest_args.extend(["--resume", &token]);
    let rest = run(&rest_args);
    assert_eq!(code(&rest), 0);
    let mut all: BTreeSet<String> = first.into_iter().collect();
    let more = records(&stdout(&rest));
    assert_eq!(all.len() + more.len(), 85);
    all.extend(more);
    assert_eq!(all, records(&full).into_iter().collect());

    assert_eq!(code(&run(&["classify", "7", "-c", "KMM", "--resume", "nope"])), 3);
    assert_eq!(code(&run_env(&args, "POLYCSP_BUDGET_SECS", "soon")), 3);
}

#[test]
fn classify_other_families() {
    let out = stdout(&run(&["classify", "8", "-c", "KMM", "--family", "cycles"]));
    assert!(out.contains("# summary KMM yes="));
    assert_eq!(code(&run(&["classify", "7", "-c", "KMM", "--family", "cycles"])), 3);
    let triads = stdout(&run(&["classify", "10", "-c", "KMM", "--family", "triads"]));
    let want = stdout(&run(&["gen", "10", "--cores-only", "--triads", "--count-only"])).trim().parse::<usize>().unwrap();
    assert_eq!(records(&triads).len(), want);
}

#[test]
fn poset4_census() {
    let o = run(&["poset4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("digraphs 3161\ncores 100\nsiggers 28\n"));
    let ord = text.lines().find(|l| l.starts_with("Ord,")).unwrap();
    // Sigma(2) yes, HM(5) no
    let cells: Vec<&str> = ord.split(',').collect();
    assert_eq!((cells[1], cells[6]), ("Yes", "No"));
    let c13 = text.lines().find(|l| l.starts_with("\"C(1,3)\",")).unwrap();
    assert_eq!(c13.rsplit(',').nth(4), Some("Yes"));
}
