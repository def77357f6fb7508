mod common;

use std::process::{Command, Output};

fn prover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prover")).args(args).output().unwrap()
}

fn path(p: std::path::PathBuf) -> String {
    p.display().to_string()
}

#[test]
fn proves_with_trace_and_check() {
    let out = prover(&[
        "--theory",
        &path(common::theory_file("nat-core.thy")),
        &path(common::problem("prime_odd.prob")),
        "--trace",
        "--check",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PROVED in 14 updates"), "{stdout}");
    assert!(stdout.contains("check: "), "{stdout}");
    assert!(stdout.contains("disj_case"));
}

#[test]
fn exit_codes() {
    let prob = path(common::problem("prime_odd.prob"));
    assert_eq!(prover(&["--max-updates", "1", &prob]).status.code(), Some(2));
    assert_eq!(prover(&["/nonexistent/x.prob"]).status.code(), Some(3));
    assert_eq!(prover(&["--max-updates", "nope", &prob]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let open = dir.path().join("open.prob");
    std::fs::write(&open, "(var a bool)\n(var b bool)\n(goal (=> a b))\n").unwrap();
    let out = prover(&["--theory", &path(common::theory_file("nat-core.thy")), &path(open)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("SATURATED"));

    let rebind = dir.path().join("rebind.prob");
    std::fs::write(&rebind, "(var n nat)\n(goal (< n (+ n 1)))\n(script \"CHOOSE n, (prime n)\")\n").unwrap();
    let out = prover(&[&path(rebind)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rebinds a problem variable"));

    let bad = dir.path().join("bad.prob");
    std::fs::write(&bad, "(goal (frobnicate 1))\n").unwrap();
    assert_eq!(prover(&[&path(bad)]).status.code(), Some(3));
}

#[test]
fn output_is_reproducible_and_json_trace_written() {
    let dir = tempfile::tempdir().unwrap();
    let prob = path(common::problem("larger_prime.prob"));
    let run = |json: &std::path::Path| {
        let out = prover(&[&prob, "--trace", "--trace-json", json.to_str().unwrap(), "--dump-rewrites"]);
        assert_eq!(out.status.code(), Some(0));
        (out.stdout, std::fs::read(json).unwrap())
    };
    let a = run(&dir.path().join("a.jsonl"));
    let b = run(&dir.path().join("b.jsonl"));
    assert_eq!(a, b);
    assert!(!a.1.is_empty());
}

#[test]
fn stuck_script_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("stuck.prob");
    std::fs::write(&f, "(var n nat)\n(goal (< n (+ n 1)))\n(script \"OBTAIN (prime n)\")\n").unwrap();
    let out = prover(&["--max-updates", "40", &path(f)]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("script stuck at OBTAIN (prime n) (box {1})"), "{stdout}");
    assert!(stdout.contains("OBTAIN() {1} => (not (prime n))"), "{stdout}");
}

#[test]
fn every_bundled_problem_proves_and_checks() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "prob") {
            let out = prover(&["--check", &path(p.clone())]);
            let stdout = String::from_utf8_lossy(&out.stdout);
            assert_eq!(out.status.code(), Some(0), "{}: {stdout}", p.display());
            assert!(stdout.starts_with("PROVED in "));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
