use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reslab::graph::{generate, write_graph, GraphKind};
use tempfile::TempDir;

fn reslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reslab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const P10: &str = r#"
F = 1
ell = 4
codec = "repetition"
seed = 7
bandwidth = 14

[graph]
kind = "path"
n = 10

[adversary]
strategy = "explicit"
nodes = [NODES]

[output]
ruling_set = "rs.txt"
partition = "part.txt"
"#;

fn p10(dir: &Path, nodes: &str) {
    fs::write(dir.join("p10.toml"), P10.replace("NODES", nodes)).unwrap();
}

#[test]
fn gen_path_and_gadget() {
    let dir = TempDir::new().unwrap();
    let o = reslab(&["gen", "path", "10"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("10 9\n1 2\n"));
    assert_eq!(text.lines().count(), 10);

    let o = reslab(&["gen", "gadget", "--f", "2", "-o", "gadget.txt"], dir.path());
    assert!(o.status.success());
    let want = write_graph(&generate(&GraphKind::IntroGadget { f: 2, tail: 0 }, 0).unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("gadget.txt")).unwrap(), want);
}

#[test]
fn gen_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    assert_eq!(reslab(&["gen", "blob", "3"], dir.path()).status.code(), Some(2));
    assert_eq!(reslab(&["gen", "grid", "--rows", "3"], dir.path()).status.code(), Some(2));
}

#[test]
fn run_p10_passes() {
    let dir = TempDir::new().unwrap();
    p10(dir.path(), "5");
    let o = reslab(&["run", "p10.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["schema"], "reslab.run.v1");
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["round_budget"], 102);
    assert_eq!(doc["runs"][0]["erased"], serde_json::json!([5]));
    assert!(doc["runs"][0]["rounds_used"].as_u64().unwrap() <= 102);
    assert!(dir.path().join("rs.txt").exists() && dir.path().join("part.txt").exists());
}

#[test]
fn run_over_budget_fails_with_one() {
    let dir = TempDir::new().unwrap();
    p10(dir.path(), "4, 5");
    let o = reslab(&["run", "p10.toml", "-o", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(doc["pass"], false);
    assert_eq!(doc["runs"][0]["verdict"]["erasures_within_budget"], false);
}

#[test]
fn run_config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(reslab(&["run", "missing.toml"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad.toml"), "F = 1\nell = 4\n").unwrap();
    assert_eq!(reslab(&["run", "bad.toml"], dir.path()).status.code(), Some(2));
    // n < f + 1 violates the oracle's preconditions.
    fs::write(
        dir.path().join("small.toml"),
        "F = 3\nell = 2\ncodec = \"mds\"\n[graph]\nkind = \"path\"\nn = 3\n[adversary]\nstrategy = \"none\"\n",
    )
    .unwrap();
    assert_eq!(reslab(&["run", "small.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_dumps() {
    let dir = TempDir::new().unwrap();
    p10(dir.path(), "5");
    assert!(reslab(&["run", "p10.toml"], dir.path()).status.success());
    assert!(reslab(&["gen", "path", "10", "-o", "g.txt"], dir.path()).status.success());
    let args = ["verify", "--graph", "g.txt", "--f", "1", "--ruling-set", "rs.txt", "--partition", "part.txt"];
    let o = reslab(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("schema reslab.verify.v1\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("PASS ")), "{text}");

    // Node 10 alone in a group of its own.
    let part = fs::read_to_string(dir.path().join("part.txt")).unwrap();
    assert!(part.contains("\n10 8 9 9\n"), "{part}");
    fs::write(dir.path().join("part.txt"), part.replace("\n10 8 9 9\n", "\n10 10 9 9\n")).unwrap();
    let o = reslab(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL partition sizes: group 10 has 1 members"), "{}", stdout(&o));

    fs::write(dir.path().join("part.txt"), &part[..part.len() / 2 - 3]).unwrap();
    assert_eq!(reslab(&args, dir.path()).status.code(), Some(2));
}

const SWEEP: &str = r#"
F = [1, 2]
ell = [0, 8]
codec = ["mds"]
seeds = [1, 2]
graphs = [{ kind = "random_tree", n = 40 }, { kind = "grid", rows = 5, cols = 6 }]
adversary = [{ strategy = "random_k", k = 1 }]
"#;

#[test]
fn sweep_csv_series_and_determinism() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("s.toml"), SWEEP).unwrap();
    let o = reslab(&["sweep", "s.toml", "-o", "a.csv", "--series", "series.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("16/16 cells pass"));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    assert!(text.starts_with("schema,graph,n,F,f,ell,"));
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().skip(1).all(|l| l.starts_with("reslab.sweep.v1,")));
    let series: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("series.json")).unwrap()).unwrap();
    assert_eq!(series["schema"], "reslab.series.v1");
    assert_eq!(series["series"].as_array().unwrap().len(), 4);

    assert!(reslab(&["sweep", "s.toml", "-o", "b.csv"], dir.path()).status.success());
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn sweep_empty_range_and_failures() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.toml"), SWEEP.replace("seeds = [1, 2]", "seeds = []")).unwrap();
    let o = reslab(&["sweep", "empty.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);

    fs::write(dir.path().join("over.toml"), SWEEP.replace("k = 1", "k = 5")).unwrap();
    assert_eq!(reslab(&["sweep", "over.toml", "-o", "o.csv"], dir.path()).status.code(), Some(1));

    fs::write(dir.path().join("typo.toml"), SWEEP.replace("seeds", "seed")).unwrap();
    assert_eq!(reslab(&["sweep", "typo.toml"], dir.path()).status.code(), Some(2));
}
