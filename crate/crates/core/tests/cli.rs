//! End-to-end runs of the `plstatic` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CLEAN: &str = "
ship(Ship) :- member(Ship, [destiny, galactica, enterprise]).
rating(stars(Rate)) :- member(Rate, [1, 2, 3, 4, 5]).
rate_my_ship(S, R) :- ship(S), rating(R).
";

const BROKEN: &str = "
:- spec_pre(atom_member/2, [one_of([var, atom]), list(atom)]).
atom_member(X, L) :- member(X, L).
main :- atom_member(1, [a]).
";

fn write(dir: &Path, name: &str, src: &str) -> PathBuf {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(&p, src).unwrap();
    p
}

fn plstatic(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_plstatic"));
    for a in args {
        cmd.arg(a);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.pl", CLEAN);
    let broken = write(dir.path(), "broken.pl", BROKEN);
    let syntax = write(dir.path(), "syntax.pl", "p(.\n");
    assert_eq!(plstatic(&[&clean]).status.code(), Some(0));
    let o = plstatic(&[&broken]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 1, "{}", stdout(&o));
    assert_eq!(plstatic(&[&syntax]).status.code(), Some(2));
    assert_eq!(plstatic(&[&dir.path().join("missing.pl")]).status.code(), Some(2));
    assert_eq!(plstatic(&[&clean, &"--format", &"xml"]).status.code(), Some(2));
    assert_eq!(plstatic(&[]).status.code(), Some(2));
}

#[test]
fn text_diagnostic_line() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.pl", BROKEN);
    let out = stdout(&plstatic(&[&broken]));
    let line = out.lines().next().unwrap();
    assert!(line.starts_with(&format!("{}:4:", broken.display())), "{line}");
    assert!(line.contains(": error: "), "{line}");
    assert!(line.ends_with("(expected one_of([var, atom]), got int)"), "{line}");
}

#[test]
fn json_records() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.pl", BROKEN);
    let out = stdout(&plstatic(&[&broken, &"--format", &"json"]));
    let records: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["type"], "diagnostic");
    assert_eq!(records[0]["expected"], "one_of([var, atom])");
    assert_eq!(records[0]["actual"], "int");
    assert_eq!(records[1]["type"], "stats");
}

#[test]
fn annotations_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.pl", CLEAN);
    let out = dir.path().join("inferred.pl");
    let o = plstatic(&[&clean, &"--format", &"annotations", &"--output", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(":- spec_post(ship/1, [any], [atom]).\n"), "{text}");
    // the emitted file is itself a valid annotation file
    let o = plstatic(&[&clean, &"--annotations", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn unwritable_output() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.pl", CLEAN);
    let o = plstatic(&[&clean, &"-o", &dir.path().join("no/such/dir/out.txt")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extra_annotation_files() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write(dir.path(), "p.pl", "main :- greet(42).\ngreet(_).\n");
    let ann = write(dir.path(), "ann.pl", ":- spec_pre(greet/1, [atom]).\n");
    assert_eq!(plstatic(&[&prog]).status.code(), Some(0));
    assert_eq!(plstatic(&[&prog, &"--annotations", &ann]).status.code(), Some(1));
}

#[test]
fn stats_rows_per_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a/ship.pl", CLEAN);
    write(dir.path(), "b/p.pl", "p(X) :- foo(X).\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = stdout(&plstatic(&[&a, &b, &"--stats"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(lines[0].starts_with(&format!("{}: variables: 4, inferred: 4 (100%)", a.display())), "{out}");
    assert!(lines[1].ends_with("unknown calls: 1 (100%)"), "{out}");
    assert!(lines[2].starts_with("total: variables: 5, inferred: 4 (80%)"), "{out}");
}

#[test]
fn caps_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.pl", CLEAN);
    let o = Command::new(env!("CARGO_BIN_EXE_plstatic"))
        .arg(&clean)
        .env("PLSTATIC_MAX_GLOBAL_ITERS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning: analysis truncated"), "{}", stdout(&o));
    let o = plstatic(&[&clean, &"--max-global-iters", &"1", &"--dialect", &"sicstus"]);
    assert!(stdout(&o).contains("analysis truncated"));
}
