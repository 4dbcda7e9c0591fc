mod common;

use std::sync::atomic::{AtomicBool, Ordering};

use mind_core::domain::ToneBand;
use mind_core::policy::{Appraisal, Mode, ProposerAction, Vote};
use mind_core::protocol::{Proposal, RulePolicy, Turn, TurnContext, TurnPolicy};
use mind_harness::compare::compare_runs;
use mind_harness::run::{evaluate, run_experiment, run_with_policy};
use mind_harness::store::{self, RUN_ARTIFACTS};
use mind_harness::{Backend, HarnessError};

use common::*;

#[test]
fn unanimous_scenario_settles_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[unanimous("u1")]);
    let cfg = config(set, tmp.path().join("run"));
    let s = run_experiment(&cfg, false).unwrap();
    assert_eq!(s.report.debate_ratio, 1.0);
    assert_eq!(s.report.total_fidelity, 1.0);
    assert_eq!(s.report.cases, 2);
    for name in ["config.toml", "transcripts.jsonl", "outcomes.json", "report.json", "report.txt"] {
        assert!(s.dir.join(name).exists(), "{name}");
    }
    assert!(!s.dir.join(store::CHECKPOINT_FILE).exists());
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[contested("c1"), unanimous("u1"), contested("c2"), contested("c3")]);
    let mut cfg = config(set, tmp.path().join("a"));
    cfg.eps = 0.2;
    cfg.seed = 42;
    run_experiment(&cfg, false).unwrap();
    let first = tmp.path().join("a");
    let snapshot: Vec<Vec<u8>> = ["transcripts.jsonl", "outcomes.json", "report.json", "report.txt"]
        .iter()
        .map(|n| read(&first, n))
        .collect();
    run_experiment(&cfg, false).unwrap();
    cfg.parallelism = 1;
    cfg.paths.out = tmp.path().join("b");
    run_experiment(&cfg, false).unwrap();
    for (i, n) in ["transcripts.jsonl", "outcomes.json", "report.json", "report.txt"].iter().enumerate() {
        assert_eq!(read(&first, n), snapshot[i], "rerun changed {n}");
        assert_eq!(read(&tmp.path().join("b"), n), snapshot[i], "worker count changed {n}");
    }
}

#[test]
fn stored_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[contested("c1"), contested("c2")]);
    let mut cfg = config(set, tmp.path().join("run"));
    cfg.mode = Mode::ToneOnly;
    cfg.seed = 9;
    let s = run_experiment(&cfg, false).unwrap();
    let before = read(&s.dir, "report.json");
    let stored = mind_harness::RunConfig::load(&s.dir.join("config.toml")).unwrap();
    assert_eq!(stored, cfg);
    run_experiment(&stored, false).unwrap();
    assert_eq!(read(&s.dir, "report.json"), before);
    assert_eq!(evaluate(&s.dir, None).unwrap(), s.report);
}

#[test]
fn invalid_scenario_aborts_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = contested("bad");
    bad.personas[1].preferences[1].value = "Buffet".into();
    let set = write_set(tmp.path(), &[unanimous("ok"), bad]);
    let out = tmp.path().join("run");
    // Validation runs before the output directory is touched.
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("report.json"), "stale").unwrap();
    let err = run_experiment(&config(set, out.clone()), false).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, HarnessError::InvalidScenario { .. }));
    assert!(msg.contains("scenarios.jsonl:2"), "{msg}");
    assert!(msg.contains("Buffet"), "{msg}");
    assert_eq!(std::fs::read_to_string(out.join("report.json")).unwrap(), "stale");
    assert!(!out.join("transcripts.jsonl").exists());

    let mut dup = unanimous("ok");
    dup.personas[2].id = "A".into();
    let set = write_set(tmp.path(), &[dup]);
    assert!(run_experiment(&config(set, out), false).unwrap_err().to_string().contains("duplicate-persona"));
}

#[test]
fn fixture_backend_needs_a_path() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[unanimous("u")]);
    let mut cfg = config(set, tmp.path().join("run"));
    cfg.backend = Backend::Fixture;
    assert!(matches!(run_experiment(&cfg, false), Err(HarnessError::Config(_))));
}

/// Rule policy that fails with a backend error on one scenario until healed.
struct Flaky {
    broken: AtomicBool,
    scenario: &'static str,
}

impl Flaky {
    fn check(&self, ctx: &TurnContext<'_>) -> mind_core::Result<()> {
        if self.broken.load(Ordering::SeqCst) && ctx.scenario.id == self.scenario {
            return Err(mind_core::Error::Backend("request timed out".into()));
        }
        Ok(())
    }
}

impl TurnPolicy for Flaky {
    fn propose(&self, ctx: &TurnContext<'_>) -> mind_core::Result<Turn<Proposal>> {
        self.check(ctx)?;
        RulePolicy.propose(ctx)
    }
    fn appraise(&self, ctx: &TurnContext<'_>, tone: ToneBand) -> mind_core::Result<Turn<Appraisal>> {
        self.check(ctx)?;
        RulePolicy.appraise(ctx, tone)
    }
    fn vote(&self, ctx: &TurnContext<'_>, a: Option<&Appraisal>) -> mind_core::Result<Turn<Vote>> {
        self.check(ctx)?;
        RulePolicy.vote(ctx, a)
    }
    fn update(&self, ctx: &TurnContext<'_>, votes: &[Vote]) -> mind_core::Result<Turn<ProposerAction>> {
        self.check(ctx)?;
        RulePolicy.update(ctx, votes)
    }
}

#[test]
fn backend_failure_checkpoints_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[contested("c1"), contested("c2"), contested("c3"), unanimous("u4")]);
    let mut cfg = config(set.clone(), tmp.path().join("run"));
    cfg.parallelism = 2;
    let flaky = Flaky {
        broken: AtomicBool::new(true),
        scenario: "c3",
    };
    let err = run_with_policy(&cfg, &flaky, false).unwrap_err();
    let HarnessError::Aborted { completed, ref checkpoint, .. } = err else {
        panic!("expected abort, got {err}")
    };
    assert_eq!(completed, 2);
    assert!(checkpoint.exists());
    assert!(!cfg.paths.out.join("report.json").exists());

    flaky.broken.store(false, Ordering::SeqCst);
    let resumed = run_with_policy(&cfg, &flaky, true).unwrap();
    assert!(!checkpoint.exists());

    let mut clean = config(set, tmp.path().join("clean"));
    clean.parallelism = 2;
    let reference = run_experiment(&clean, false).unwrap();
    assert_eq!(resumed.report, reference.report);
    for n in ["transcripts.jsonl", "outcomes.json", "report.json"] {
        assert_eq!(read(&resumed.dir, n), read(&reference.dir, n), "{n}");
    }
}

#[test]
fn resume_refuses_a_changed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[contested("c1"), contested("c2")]);
    let cfg = config(set, tmp.path().join("run"));
    let flaky = Flaky {
        broken: AtomicBool::new(true),
        scenario: "c2",
    };
    assert!(run_with_policy(&cfg, &flaky, false).is_err());
    let mut changed = cfg.clone();
    changed.tau = 0.6;
    assert!(matches!(run_with_policy(&changed, &RulePolicy, true), Err(HarnessError::Config(_))));
}

#[test]
fn comparisons() {
    let tmp = tempfile::tempdir().unwrap();
    let set = write_set(tmp.path(), &[contested("c1"), contested("c2")]);
    let mut cfg = config(set, tmp.path().join("mind"));
    let mind = run_experiment(&cfg, false).unwrap().report;
    let same = compare_runs(&mind, &mind).unwrap();
    assert!(same.rows.iter().all(|r| r.delta.is_none_or(|d| d == 0.0)));
    assert!(same.to_table().contains("Debate Ratio"));

    cfg.mode = Mode::Base;
    cfg.paths.out = tmp.path().join("base");
    let base = run_experiment(&cfg, false).unwrap().report;
    let c = compare_runs(&base, &mind).unwrap();
    let dr = c.rows.iter().find(|r| r.metric == "Debate Ratio").unwrap();
    assert_eq!(dr.delta, Some(mind.debate_ratio - base.debate_ratio));
    let tom = c.rows.iter().find(|r| r.metric == "ToM MAE").unwrap();
    assert_eq!((tom.a, tom.delta), (None, None));

    let other = write_set(&tmp.path().join("o"), &[contested("x1")]);
    let mut ocfg = config(other, tmp.path().join("other"));
    ocfg.mode = Mode::Mind;
    let disjoint = run_experiment(&ocfg, false).unwrap().report;
    assert!(matches!(compare_runs(&mind, &disjoint), Err(HarnessError::ScenarioMismatch(_))));
}

#[test]
fn artifact_list_is_complete() {
    assert!(RUN_ARTIFACTS.contains(&"exchanges.jsonl"));
    assert!(RUN_ARTIFACTS.contains(&"checkpoint.json"));
}
