use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_sgground");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn parse_prints_document() {
    let o = run(&["parse", "cup on table"], "");
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["relationships"][0]["predicate"], "on");
    assert_eq!(doc["objects"][1]["name"], "table");

    let o = run(&["parse", "cup {on} table"], "");
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn match_with_trace() {
    let scene = format!("{FIXTURES}/scenes/fix-cups.json");
    let o = run(
        &[
            "match",
            "--scene",
            &scene,
            "--expr",
            "cup on the table",
            "--trace",
        ],
        "",
    );
    let out = stdout(&o);
    assert!(o.status.success());
    assert!(out.contains("action: Select"), "{out}");
    assert!(out.contains("Object: [0, 1, 3]"), "{out}");
    assert!(out.contains("candidate #1 (4, on, 1)"), "{out}");
}

#[test]
fn repl_quits_with_zero() {
    let scene = format!("{FIXTURES}/scenes/fix-cups.json");
    let o = run(&["repl", "--scene", &scene], "cup on the table\n2\nquit\n");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("grounded: node 4"));
}

#[test]
fn eval_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(
        &[
            "eval",
            "--scenes",
            &format!("{FIXTURES}/scenes"),
            "--commands",
            &format!("{FIXTURES}/commands.jsonl"),
            "--out",
            out.to_str().unwrap(),
        ],
        "",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["total"], 12);
    assert_eq!(report["avg_interactions"], 10.0 / 12.0);

    let o = run(
        &[
            "eval",
            "--scenes",
            ".",
            "--commands",
            "x",
            "--out",
            "y",
            "--sim",
            "vectors",
        ],
        "",
    );
    assert!(!o.status.success());
}
