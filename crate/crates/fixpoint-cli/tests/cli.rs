use fixpoint::encoding::{bin_decode, parse_letter, sharp_strip};
use fixpoint::turing::TmProgram;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn fixpoint(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fixpoint"))
        .current_dir(dir)
        .args(args)
        .env_remove("FIXPOINT_BUDGET_MS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn records(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn theta_interval_is_exact() {
    let d = tempfile::tempdir().unwrap();
    let o = fixpoint(d.path(), &["directions", "theta", "--word", "120", "--eps", "0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["interval"]["lo"], "5/12");
    assert_eq!(v["interval"]["hi"], "7/12");
}

#[test]
fn search_lands_in_its_interval() {
    let d = tempfile::tempdir().unwrap();
    let o = fixpoint(d.path(), &["directions", "search", "--x", "1/5", "--depth", "6", "--eps", "1/10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["word"].as_str().unwrap().len(), 6);
}

fn clock(cell: &str) -> u128 {
    let u = parse_letter(cell).unwrap();
    bin_decode(sharp_strip(&u[2]).unwrap()).unwrap()
}

#[test]
fn coordinate_run_cycles_its_clock() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("m.json"),
        r#"{"rule": {"generator": "coordi", "S": 3, "T": 4},
            "initial": {"grid": {"cells": 6, "phase": 1, "clock": 2}},
            "steps": {"down": 3, "up": 9},
            "export": {"trace": "t.ndjson", "pgm": "t.pgm", "pgm_field": "Clock"}}"#,
    )
    .unwrap();
    let o = fixpoint(d.path(), &["run", "m.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = records(&std::fs::read_to_string(d.path().join("t.ndjson")).unwrap());
    assert_eq!(rows.len(), 13);
    for r in &rows {
        let t = r["t"].as_i64().unwrap();
        let cells = r["cells"].as_array().unwrap();
        for c in cells {
            assert_eq!(clock(c.as_str().unwrap()) as i64, (2 + t).rem_euclid(4));
        }
    }
    let pgm = std::fs::read(d.path().join("t.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n6 13\n255\n"));
}

#[test]
fn rejection_exits_two_with_a_record() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("m.json"),
        r#"{"rule": {"generator": "coordi", "S": 3, "T": 4},
            "initial": {"letters": {"letters": ["44|41|444|444"]}, "period": 3},
            "steps": {"up": 2}}"#,
    )
    .unwrap();
    let o = fixpoint(d.path(), &["run", "m.json"]);
    assert_eq!(code(&o), 1, "a misplaced key is a validation error");
    std::fs::write(
        d.path().join("m.json"),
        r#"{"rule": {"generator": "coordi", "S": 3, "T": 4},
            "initial": {"letters": {"letters": ["44|41|444|444"], "period": 3}},
            "steps": {"up": 2}}"#,
    )
    .unwrap();
    let o = fixpoint(d.path(), &["run", "m.json"]);
    assert_eq!(code(&o), 2);
    let recs = records(&String::from_utf8(o.stdout).unwrap());
    assert!(recs.last().unwrap().get("reject").is_some());
}

#[test]
fn invalid_manifests_exit_one() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("m.json"), r#"{"rule": {"generator": "nope"}, "initial": {"random": {"period": 2}}}"#)
        .unwrap();
    let o = fixpoint(d.path(), &["run", "m.json"]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "validation");
    let o = fixpoint(d.path(), &["run", "missing.json"]);
    assert_eq!(code(&o), 1);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["code"], "io");
    let o = fixpoint(d.path(), &["verify", "nosuch"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn runs_are_reproducible() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("swap.perm"), "fields A, B\nexch A, B\n").unwrap();
    std::fs::write(d.path().join("rule.json"), r#"{"generator": "program", "source": "swap.perm", "layout": [1, 1]}"#)
        .unwrap();
    std::fs::write(
        d.path().join("m.json"),
        r#"{"rule": "rule.json", "initial": {"random": {"period": 7}}, "steps": {"down": 4, "up": 4},
            "export": {"trace": "t.ndjson", "pgm": "t.pgm", "csv": "t.csv"}, "seed": 42}"#,
    )
    .unwrap();
    let mut outs = vec![];
    for _ in 0..2 {
        assert_eq!(code(&fixpoint(d.path(), &["run", "m.json"])), 0);
        outs.push(["t.ndjson", "t.pgm", "t.csv"].map(|f| std::fs::read(d.path().join(f)).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn universal_rule_runs_one_work_period() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("m.json"),
        r#"{"rule": {"generator": "unive", "nu": [0, 1], "kprime": [1, 1], "machine": "swap"},
            "initial": {"simulated": {"letters": ["0|1", "1|1", "1|0"]}},
            "steps": {"up": 109}}"#,
    )
    .unwrap();
    let o = fixpoint(d.path(), &["run", "m.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(records(&String::from_utf8(o.stdout).unwrap()).len(), 110);
}

#[test]
fn verify_reports_pass_and_budget() {
    let d = tempfile::tempdir().unwrap();
    let o = fixpoint(d.path(), &["verify", "cover", "--depth", "5"]);
    assert_eq!(code(&o), 0);
    let recs = records(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(recs.last().unwrap()["summary"], "pass");
    assert!(recs.iter().all(|r| r.get("status").is_none_or(|s| s == "pass")));
    let o = Command::new(env!("CARGO_BIN_EXE_fixpoint"))
        .args(["verify", "koo"])
        .env("FIXPOINT_BUDGET_MS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    let recs = records(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(recs.last().unwrap()["summary"], "budget");
}

#[test]
fn verify_gamma_u_and_unive() {
    let d = tempfile::tempdir().unwrap();
    let o = fixpoint(d.path(), &["verify", "gammaU", "--machines", "100", "--steps", "30"]);
    assert_eq!(code(&o), 0);
    let o = fixpoint(d.path(), &["verify", "unive", "--toy", "swap"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn solve_and_compile() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("swap.perm"), "fields A, B\nexch A, B\n").unwrap();
    let o = fixpoint(d.path(), &["solve", "toy-unive", "--kprime", "1,1", "--perm", "swap.perm"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(&o);
    let (s, t, u) = (w["S"].as_u64().unwrap(), w["T"].as_u64().unwrap(), w["U"].as_u64().unwrap());
    assert_eq!(t, 4 * u + s + 1);
    let o = fixpoint(d.path(), &["compile", "swap.perm", "--layout", "1,1", "--out", "f.tm", "--inverse-out", "b.tm"]);
    assert_eq!(code(&o), 0);
    for f in ["f.tm", "b.tm"] {
        TmProgram::from_text(&std::fs::read_to_string(d.path().join(f)).unwrap()).unwrap();
    }
    let o = fixpoint(d.path(), &["solve", "toy-unive", "--kprime", "1,1", "--tm", "f.tm", "--tm-inv", "b.tm"]);
    assert_eq!(json(&o)["S"].as_u64().unwrap(), s);
    let o = fixpoint(d.path(), &["solve", "self-sim", "--samples", "8:18,14:30,20:42", "--min-ratio", "9/10"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["certified"], false);
    assert_eq!(v["executable"], false);
    let o = fixpoint(d.path(), &["solve", "sequences", "--recipe", "hieraB", "--q", "2", "--n0", "3", "--levels", "4"]);
    assert_eq!(code(&o), 2, "T = 2S is one short at Q = 2");
}

#[test]
fn halting_reduction_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = fixpoint(d.path(), &["reduce", "halting", "--halts-at", "5", "--levels", "16"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["first_undefined"], 5);
    assert_eq!(v["defined"].as_array().unwrap().iter().filter(|b| b.as_bool().unwrap()).count(), 5);
}
