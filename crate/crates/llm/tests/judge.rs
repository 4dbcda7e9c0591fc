use std::sync::atomic::{AtomicU32, Ordering};

use mind_core::golden;
use mind_core::protocol::run_item;
use mind_llm::client::{ChatRequest, FnTransport};
use mind_llm::judge::{judge_pair, JudgePlan, Winner, CRITERIA};
use mind_llm::LlmConfig;

fn plan(version: &str, f: &golden::GoldenFixture) -> JudgePlan {
    let (o, e) = run_item(&f.scenario, &f.item, &Default::default(), f.seed).unwrap();
    JudgePlan::from_run(version, &[o], &e)
}

/// Answers for whichever version sits in the first slot.
fn slot_of(req: &ChatRequest, version: &str) -> bool {
    let user = &req.messages[1].content;
    let a = user.find(&format!("[Version]: {version}")).unwrap();
    a < user.find("<plan_B>").unwrap()
}

#[test]
fn identical_plans_tie_everywhere() {
    let p = plan("MIND", &golden::strategic_update());
    // A position-biased judge always answers A; the swap cancels it.
    let t = FnTransport(|_: &ChatRequest| Ok("A,A,A,A,A".to_string()));
    let v = judge_pair(&t, &LlmConfig::default(), &p, &p).unwrap();
    assert!(v.criteria.iter().all(|c| c.winner == Winner::Tie));
    assert_eq!(v.overall, Winner::Tie);
}

#[test]
fn consistent_preference_wins_every_criterion() {
    let mind = plan("MIND", &golden::strategic_update());
    let base = plan("Base", &golden::rational_deadlock());
    let t = FnTransport(|req: &ChatRequest| {
        Ok(if slot_of(req, "MIND") { "A,A,A,A,A" } else { "B,B,B,B,B" }.to_string())
    });
    let v = judge_pair(&t, &LlmConfig::default(), &mind, &base).unwrap();
    let names: Vec<_> = v.criteria.iter().map(|c| c.criterion.as_str()).collect();
    assert_eq!(names, CRITERIA);
    assert!(v.criteria.iter().all(|c| c.winner == Winner::A));
    assert_eq!(v.overall, Winner::A);
}

#[test]
fn order_disagreement_ties_that_criterion() {
    let mind = plan("MIND", &golden::strategic_update());
    let base = plan("Base", &golden::rational_deadlock());
    let t = FnTransport(|req: &ChatRequest| {
        // Fluency follows the slot, the rest follow the plan.
        Ok(if slot_of(req, "MIND") { "A,A,A,A,A,A" } else { "B,B,B,B,A,B" }.to_string())
    });
    let v = judge_pair(&t, &LlmConfig::default(), &mind, &base).unwrap();
    let winners: Vec<_> = v.criteria.iter().map(|c| c.winner).collect();
    assert_eq!(winners, vec![Winner::A, Winner::A, Winner::A, Winner::A, Winner::Tie]);
    assert_eq!(v.overall, Winner::A);
}

#[test]
fn unparseable_verdict_is_an_error() {
    let p = plan("MIND", &golden::opinion_shift());
    let calls = AtomicU32::new(0);
    let t = FnTransport(|_: &ChatRequest| {
        calls.fetch_add(1, Ordering::SeqCst);
        Ok("Plan A feels better overall.".to_string())
    });
    assert!(judge_pair(&t, &LlmConfig::default(), &p, &p).is_err());
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn judge_prompt_names_both_plans() {
    let mind = plan("MIND", &golden::strategic_update());
    let base = plan("Base", &golden::strategic_update());
    let msgs = mind_llm::judge::render_judge(&mind, &base).unwrap();
    assert!(msgs[0].content.contains("You must output structured results with NO reasoning."));
    assert!(msgs[1].content.contains("[Final Constraints]: restaurant__ambiance: Casual"));
    assert!(msgs[1].content.contains("Voter A: DISAGREE, suggests \"Casual\""));
}
