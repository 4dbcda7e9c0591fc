mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn mind(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mind")).args(args).current_dir(cwd).output().expect("spawn mind")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn forge_run_eval_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = mind(&["forge", "--synthetic", "30", "--max-groups", "3", "--seed", "5", "--out", "set"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("set/scenarios.jsonl").exists());
    assert!(d.join("set/forge.json").exists());

    for mode in ["mind", "base"] {
        let o = mind(&["run", "--mode", mode, "--scenarios", "set/scenarios.jsonl", "--out", mode, "--seed", "2"], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("Debate Ratio"));
    }

    let before = read(&d.join("mind"), "report.json");
    let o = mind(&["eval", "mind"], d);
    assert!(o.status.success());
    assert_eq!(read(&d.join("mind"), "report.json"), before);

    let o = mind(&["compare", "base", "mind/report.json", "--json"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["rows"].as_array().is_some_and(|r| !r.is_empty()));
}

#[test]
fn invalid_scenario_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = contested("bad");
    bad.personas[0].preferences[2].value = "Frantic".into();
    let set = write_set(tmp.path(), &[bad]);
    let o = mind(&["run", "--scenarios", set.to_str().unwrap(), "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Frantic"));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unknown_mode_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mind(&["run", "--mode", "telepathy"], tmp.path());
    assert!(!o.status.success());
}
