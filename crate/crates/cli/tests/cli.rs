use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn disperse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disperse")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn gen_writes_the_text_format() {
    let dir = TempDir::new().unwrap();
    let ring = path(&dir, "ring.txt");
    let out = disperse(&["gen", "--family", "ring", "--n", "8", "--out", &ring]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "n=8 m=8 D=4 Δ=2");
    assert_eq!(fs::read_to_string(&ring).unwrap().lines().next(), Some("8 8"));

    let bell = path(&dir, "bell.txt");
    assert_eq!(code(&disperse(&["gen", "--family", "dumbbell", "--n", "6", "--out", &bell])), 0);
    assert_eq!(fs::read_to_string(&bell).unwrap().lines().count(), 1 + 6);
}

#[test]
fn gen_rejects_impossible_edge_counts() {
    let out = disperse(&["gen", "--family", "connected", "--n", "4", "--m", "7"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("m = 7"));
}

#[test]
fn run_prt_on_ring() {
    let dir = TempDir::new().unwrap();
    let summary = path(&dir, "summary.json");
    let out = disperse(&["run", "--family", "ring", "--n", "8", "--algo", "prt", "--placement", "rooted:0", "--summary", &summary]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&summary).unwrap();
    let keys: Vec<&str> = text.split('"').skip(1).step_by(2).filter(|k| k.chars().all(|c| c.is_alphabetic() || c == '_')).collect();
    assert_eq!(keys, ["algo", "prt", "n", "m", "D", "dispersed_at", "bound", "pass", "peak_bits"]);
    assert!(text.contains("\"pass\":true") && text.contains("\"bound\":16"));
}

#[test]
fn run_checks_compatibility() {
    assert_eq!(code(&disperse(&["run", "--family", "ring", "--n", "6", "--algo", "rooted-tree"])), 2);
    let out = disperse(&["run", "--family", "tree", "--n", "6", "--algo", "rooted-graph", "--placement", "identity"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&disperse(&["run", "--family", "ring", "--n", "6", "--algo", "prt", "--placement", "list:0,1"])), 2);
    assert_eq!(code(&disperse(&["run", "--family", "ring", "--n", "6", "--algo", "bfs"])), 2);
}

#[test]
fn graph_nlogn_on_dumbbell() {
    let out = disperse(&["run", "--family", "dumbbell", "--n", "10", "--algo", "graph-nlogn", "--placement", "rooted:0"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("\"pass\":true"));
}

#[test]
fn run_then_verify_agrees() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str, &str); 5] = [
        (&["--family", "ring", "--n", "9", "--permute", "--seed", "4"], "prt", "random:4"),
        (&["--family", "tree", "--n", "12", "--seed", "2"], "rooted-tree", "rooted:0"),
        (&["--family", "connected", "--n", "10", "--m", "9", "--seed", "1"], "rooted-graph", "rooted:2"),
        (&["--family", "connected", "--n", "10", "--m", "20", "--seed", "1"], "graph-logn", "random:7"),
        (&["--family", "dumbbell", "--n", "9"], "graph-nlogn", "random:1"),
    ];
    for (i, (family, algo, placement)) in cases.iter().enumerate() {
        let graph = path(&dir, &format!("g{i}.txt"));
        let trace = path(&dir, &format!("t{i}.jsonl"));
        let mut gen = vec!["gen"];
        gen.extend_from_slice(family);
        gen.extend_from_slice(&["--out", &graph]);
        assert_eq!(code(&disperse(&gen)), 0);
        for early in [false, true] {
            let mut run = vec!["run", "--graph", &graph, "--algo", algo, "--placement", placement, "--trace", &trace];
            if early {
                run.push("--early-stop");
            }
            assert_eq!(code(&disperse(&run)), 0, "{algo}");
            let out = disperse(&["verify", "--trace", &trace, "--graph", &graph]);
            assert_eq!(code(&out), 0, "{algo}: {}", stdout(&out));
        }
    }
}

/// Points the first move of `round` one node further along.
fn tamper(trace: &Path, round: u64) {
    let text = fs::read_to_string(trace).unwrap();
    let prefix = format!("{{\"round\":{round},\"moves\":[[");
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            let Some(rest) = l.strip_prefix(&prefix) else { return l.to_string() };
            let end = rest.find(']').unwrap();
            let mut f: Vec<u64> = rest[..end].split(',').map(|x| x.parse().unwrap()).collect();
            f[3] = (f[3] + 1) % 8;
            format!("{prefix}{}{}", f.iter().map(u64::to_string).collect::<Vec<_>>().join(","), &rest[end..])
        })
        .collect();
    fs::write(trace, lines.join("\n") + "\n").unwrap();
}

#[test]
fn verify_finds_the_tampered_round() {
    let dir = TempDir::new().unwrap();
    let (graph, trace) = (path(&dir, "ring.txt"), path(&dir, "t.jsonl"));
    disperse(&["gen", "--family", "ring", "--n", "8", "--out", &graph]);
    assert_eq!(code(&disperse(&["run", "--graph", &graph, "--algo", "prt", "--trace", &trace])), 0);
    tamper(Path::new(&trace), 3);
    let out = disperse(&["verify", "--trace", &trace, "--graph", &graph]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("round 3"), "{}", stdout(&out));
}

#[test]
fn verify_against_the_wrong_graph() {
    let dir = TempDir::new().unwrap();
    let (graph, other, trace) = (path(&dir, "ring.txt"), path(&dir, "other.txt"), path(&dir, "t.jsonl"));
    disperse(&["gen", "--family", "ring", "--n", "8", "--out", &graph]);
    // Same ring with the two ports of node 0 swapped.
    let text = fs::read_to_string(&graph).unwrap().replace("0 0 7 1", "0 1 7 1").replace("0 1 1 0", "0 0 1 0");
    let (header, edges) = text.split_once('\n').unwrap();
    let mut edges: Vec<&str> = edges.lines().collect();
    edges.sort_unstable();
    fs::write(&other, format!("{header}\n{}\n", edges.join("\n"))).unwrap();
    disperse(&["run", "--graph", &graph, "--algo", "prt", "--trace", &trace]);
    let out = disperse(&["verify", "--trace", &trace, "--graph", &other]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("round 1:"), "{}", stdout(&out));
}

#[test]
fn batch_sweep_writes_reports() {
    let dir = TempDir::new().unwrap();
    let (cfg, csv, md) = (path(&dir, "sweep.cfg"), path(&dir, "out.csv"), path(&dir, "summary.md"));
    fs::write(&cfg, "family = ring\nn = 8, 16, 32\nseeds = 5\nalgo = prt\nplacement = rooted\n").unwrap();
    let out = disperse(&["batch", &cfg, "--out", &csv, "--summary", &md]);
    assert_eq!(code(&out), 0);
    let rows: Vec<String> = fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows[0], "family,n,m,D,seed,algo,dispersed_at,bound,pass,peak_bits");
    assert_eq!(rows.len(), 1 + 15);
    assert!(rows[1..].iter().all(|r| r.contains(",true,")));
    let summary = fs::read_to_string(&md).unwrap();
    assert!(summary.contains("| ring | prt | O(log n) | 2n | 15 | 15 |"), "{summary}");
}

#[test]
fn batch_fails_on_a_bad_trace() {
    let dir = TempDir::new().unwrap();
    let (graph, trace, cfg) = (path(&dir, "ring.txt"), path(&dir, "t.jsonl"), path(&dir, "sweep.cfg"));
    disperse(&["gen", "--family", "ring", "--n", "8", "--out", &graph]);
    disperse(&["run", "--graph", &graph, "--algo", "prt", "--trace", &trace]);
    tamper(Path::new(&trace), 2);
    fs::write(&cfg, format!("family = ring\nn = 8\nalgo = prt\n\ntrace = {trace}\ngraph = {graph}\n")).unwrap();
    let out = disperse(&["batch", &cfg]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(",false,")).count(), 1);
}

#[test]
fn batch_with_nothing_to_do() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "empty.cfg");
    fs::write(&cfg, "# nothing yet\n").unwrap();
    let out = disperse(&["batch", &cfg]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(code(&disperse(&["batch", &path(&dir, "missing.cfg")])), 2);
}
