use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contextmine"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn ingest(dir: &Path) {
    let f = fixture_dir();
    ok(bin()
        .args(["ingest", "--papers"])
        .arg(f.join("papers.jsonl"))
        .arg("--citations")
        .arg(f.join("citations.jsonl"))
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap());
}

#[test]
fn ingest_run_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let index = tmp.path().join("index");
    let again = tmp.path().join("index2");
    ingest(&index);
    ingest(&again);
    for name in [
        "papers.json",
        "edges.json",
        "contexts.json",
        "manifest.json",
    ] {
        assert_eq!(
            std::fs::read(index.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }

    let seeds = ok(bin()
        .args([
            "seed-search",
            "--query",
            "event extraction",
            "--k",
            "5",
            "--index",
        ])
        .arg(&index)
        .output()
        .unwrap());
    let mut ids: Vec<&str> = seeds
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    ids.sort();
    assert_eq!(ids, ["P007", "P042", "P088", "P123", "P171"]);

    let runs = tmp.path().join("runs");
    let tsv = ok(bin()
        .args([
            "run",
            "--query",
            "event extraction",
            "--k",
            "5",
            "--backend",
            "stub",
            "--index",
        ])
        .arg(&index)
        .arg("--config")
        .arg(fixture_dir().join("config.toml"))
        .arg("--out")
        .arg(&runs)
        .output()
        .unwrap());
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("1\tACE 2005\t6\t"));
    assert!(lines[12].starts_with("12\tTAC KBP 2015\t1\t"));

    let run_dir = std::fs::read_dir(&runs)
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    assert_eq!(
        std::fs::read_to_string(run_dir.join("table.tsv")).unwrap(),
        tsv
    );
    let report = ok(bin()
        .arg("eval")
        .arg("--run")
        .arg(&run_dir)
        .arg("--gold")
        .arg(fixture_dir().join("gold.jsonl"))
        .output()
        .unwrap());
    assert!(report.contains("Average Recall"));
    assert!(report.contains("70.00"));
}

#[test]
fn eval_of_missing_run_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("eval")
        .arg("--run")
        .arg(tmp.path().join("nope"))
        .arg("--gold")
        .arg(fixture_dir().join("gold.jsonl"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("run not found"));
}

#[test]
fn gen_fixture_reproduces_committed_files() {
    let tmp = tempfile::tempdir().unwrap();
    ok(bin()
        .arg("gen-fixture")
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap());
    for name in [
        "papers.jsonl",
        "citations.jsonl",
        "gold.jsonl",
        "manifest.json",
    ] {
        assert_eq!(
            std::fs::read(tmp.path().join(name)).unwrap(),
            std::fs::read(fixture_dir().join(name)).unwrap()
        );
    }
}
