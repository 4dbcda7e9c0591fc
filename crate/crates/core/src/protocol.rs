//! Per-item negotiation loop and transcripts.
//!
//! For one constraint item every agent first proposes its private value. A
//! seeded draw picks one proposal as the current value; its author stays the
//! proposer for the whole item. Each round the other agents (optionally)
//! appraise and then vote; the proposer counts as an implicit agree. Without
//! consensus the proposer revises before the next round. After `max_rounds`
//! failed rounds the value of the highest-willingness agent is adopted.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ConstraintItem, Persona, Preference, Scenario, ToneBand, WillingnessScore};
use crate::error::{Error, Result};
use crate::policy::{
    appraise, base_vote, cast_vote, encode_tone, propose_update, Appraisal, Mode, PolicyConfig, ProposerAction, Vote,
};
use crate::rng::{derive_seed, rng_from_seed};

pub const TRANSCRIPT_SCHEMA: &str = "mind-transcript/1";

/// Phase-1 proposal of an agent's private value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub value: String,
    pub rationale: String,
    pub tone: ToneBand,
    /// This proposal was drawn as the initial current value.
    #[serde(default)]
    pub selected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolution {
    DebateRound { round: u32 },
    Fallback,
}

impl Resolution {
    pub fn is_debate(&self) -> bool {
        matches!(self, Resolution::DebateRound { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionRecord {
    pub final_value: String,
    pub resolution: Resolution,
}

/// A turn whose backend output was unusable and was replaced by the rule
/// policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degradation {
    pub turn: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    Proposal(Proposal),
    Appraisal(Appraisal),
    Vote(Vote),
    ProposerAction(ProposerAction),
    Resolution(ResolutionRecord),
    Degradation(Degradation),
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::Proposal(_) => "proposal",
            EventPayload::Appraisal(_) => "appraisal",
            EventPayload::Vote(_) => "vote",
            EventPayload::ProposerAction(_) => "proposer_action",
            EventPayload::Resolution(_) => "resolution",
            EventPayload::Degradation(_) => "degradation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub scenario_id: String,
    pub item_key: String,
    /// Position within the item's event stream.
    pub seq: u32,
    /// 0 for phase-1 proposals, then 1..=max_rounds.
    pub round: u32,
    pub actor: String,
    /// Internal to the actor; never shown to other agents.
    pub hidden: bool,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    schema: String,
    #[serde(flatten)]
    event: TranscriptEvent,
}

impl TranscriptEvent {
    pub fn to_jsonl(&self) -> Result<String> {
        Ok(serde_json::to_string(&EventLine {
            schema: TRANSCRIPT_SCHEMA.into(),
            event: self.clone(),
        })?)
    }

    pub fn from_jsonl(line: &str) -> Result<Self> {
        let parsed: EventLine = serde_json::from_str(line)?;
        if parsed.schema != TRANSCRIPT_SCHEMA {
            return Err(Error::Schema {
                expected: TRANSCRIPT_SCHEMA,
                found: parsed.schema,
            });
        }
        Ok(parsed.event)
    }
}

pub fn transcript_to_jsonl(events: &[TranscriptEvent]) -> Result<String> {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_jsonl()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn transcript_from_jsonl(text: &str) -> Result<Vec<TranscriptEvent>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(TranscriptEvent::from_jsonl)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub id: String,
    /// Initial (private) value.
    pub value: String,
    pub w: WillingnessScore,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub scenario_id: String,
    pub item_key: String,
    pub final_value: String,
    pub resolution: Resolution,
    /// False for hard items, which are settled without negotiation.
    pub negotiated: bool,
    pub proposer: Option<String>,
    /// Per agent, in scenario order.
    pub agents: Vec<AgentOutcome>,
    /// Agents holding the maximal willingness on this item.
    pub top_agents: Vec<String>,
}

impl ItemOutcome {
    pub fn group_size(&self) -> usize {
        self.agents.len()
    }

    pub fn top_agent_hit(&self) -> bool {
        self.agents.iter().any(|a| a.matched && self.top_agents.contains(&a.id))
    }
}

/// Inputs available to an agent for one turn.
#[derive(Debug, Clone, Copy)]
pub struct TurnContext<'a> {
    pub scenario: &'a Scenario,
    pub item: &'a ConstraintItem,
    pub agent: &'a Persona,
    pub own: &'a Preference,
    pub round: u32,
    pub current_value: &'a str,
    pub mode: Mode,
    /// Tone the agent expresses in this turn.
    pub tone: ToneBand,
    /// Every event of this item so far; consumers must skip hidden ones that
    /// belong to other agents.
    pub history: &'a [TranscriptEvent],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn<T> {
    pub record: T,
    pub degraded: Option<Degradation>,
}

impl<T> Turn<T> {
    pub fn clean(record: T) -> Self {
        Self { record, degraded: None }
    }
}

/// Backend that decides each agent turn.
pub trait TurnPolicy: Sync {
    fn propose(&self, ctx: &TurnContext<'_>) -> Result<Turn<Proposal>>;
    fn appraise(&self, ctx: &TurnContext<'_>, proposer_tone: ToneBand) -> Result<Turn<Appraisal>>;
    /// `appraisal` is present exactly when the mode appraises.
    fn vote(&self, ctx: &TurnContext<'_>, appraisal: Option<&Appraisal>) -> Result<Turn<Vote>>;
    /// `votes` in agent order, proposer excluded.
    fn update(&self, ctx: &TurnContext<'_>, votes: &[Vote]) -> Result<Turn<ProposerAction>>;
}

/// The deterministic rule policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct RulePolicy;

impl TurnPolicy for RulePolicy {
    fn propose(&self, ctx: &TurnContext<'_>) -> Result<Turn<Proposal>> {
        Ok(Turn::clean(Proposal {
            value: ctx.own.value.clone(),
            rationale: format!(
                "[{}] I would like {} for {}.",
                ctx.tone,
                ctx.own.value,
                ctx.item.item_name().replace('_', " ")
            ),
            tone: ctx.tone,
            selected: false,
        }))
    }

    fn appraise(&self, ctx: &TurnContext<'_>, proposer_tone: ToneBand) -> Result<Turn<Appraisal>> {
        Ok(Turn::clean(appraise(ctx.own, ctx.current_value, proposer_tone)))
    }

    fn vote(&self, ctx: &TurnContext<'_>, appraisal: Option<&Appraisal>) -> Result<Turn<Vote>> {
        let vote = match appraisal {
            Some(a) => cast_vote(a, ctx.own, ctx.item, ctx.current_value, ctx.round, ctx.tone)?,
            None => base_vote(ctx.own, ctx.item, ctx.current_value, ctx.round, ctx.tone)?,
        };
        Ok(Turn::clean(vote))
    }

    fn update(&self, ctx: &TurnContext<'_>, votes: &[Vote]) -> Result<Turn<ProposerAction>> {
        Ok(Turn::clean(propose_update(
            ctx.own,
            ctx.current_value,
            votes,
            ctx.item,
            ctx.mode.appraisal_on(),
            ctx.tone,
        )?))
    }
}

/// `(1 + agrees) / group_size >= tau`; the proposer is the implicit `1`.
pub fn check_consensus(votes: &[Vote], group_size: usize, tau: f64) -> bool {
    if group_size == 0 {
        return false;
    }
    let agree = 1 + votes.iter().filter(|v| v.is_agree()).count();
    agree as f64 / group_size as f64 >= tau
}

/// Value of the highest-willingness agent; ties go to the earliest.
pub fn fallback<'a>(prefs: &[(&'a str, &'a Preference)]) -> Result<&'a str> {
    let mut best: Option<&(&str, &Preference)> = None;
    for entry in prefs {
        if best.is_none_or(|b| entry.1.w > b.1.w) {
            best = Some(entry);
        }
    }
    best.map(|(_, p)| p.value.as_str()).ok_or(Error::EmptyInput("fallback needs at least one preference"))
}

struct Recorder<'a> {
    scenario_id: &'a str,
    item_key: &'a str,
    events: Vec<TranscriptEvent>,
}

impl Recorder<'_> {
    fn push(&mut self, round: u32, actor: &str, payload: EventPayload) {
        let hidden = matches!(payload, EventPayload::Appraisal(_) | EventPayload::Degradation(_));
        self.events.push(TranscriptEvent {
            scenario_id: self.scenario_id.to_string(),
            item_key: self.item_key.to_string(),
            seq: self.events.len() as u32,
            round,
            actor: actor.to_string(),
            hidden,
            payload,
        });
    }

    fn push_turn<T>(&mut self, round: u32, actor: &str, turn: Turn<T>, wrap: fn(T) -> EventPayload) {
        if let Some(d) = turn.degraded {
            self.push(round, actor, EventPayload::Degradation(d));
        }
        self.push(round, actor, wrap(turn.record));
    }
}

fn build_outcome(
    s: &Scenario,
    item: &ConstraintItem,
    prefs: &[(&Persona, &Preference)],
    final_value: String,
    resolution: Resolution,
    negotiated: bool,
    proposer: Option<String>,
) -> ItemOutcome {
    let max_w = prefs.iter().map(|(_, p)| p.w).max().unwrap_or(WillingnessScore::MIN);
    ItemOutcome {
        scenario_id: s.id.clone(),
        item_key: item.key.clone(),
        agents: prefs
            .iter()
            .map(|(persona, p)| AgentOutcome {
                id: persona.id.clone(),
                value: p.value.clone(),
                w: p.w,
                matched: p.value == final_value,
            })
            .collect(),
        top_agents: prefs
            .iter()
            .filter(|(_, p)| p.w == max_w)
            .map(|(persona, _)| persona.id.clone())
            .collect(),
        final_value,
        resolution,
        negotiated,
        proposer,
    }
}

fn collect_prefs<'a>(s: &'a Scenario, item: &ConstraintItem) -> Result<Vec<(&'a Persona, &'a Preference)>> {
    s.personas
        .iter()
        .map(|p| {
            p.preference_for(&item.key)
                .map(|pref| (p, pref))
                .ok_or_else(|| Error::IncompleteScenario {
                    persona: p.id.clone(),
                    item: item.key.clone(),
                })
        })
        .collect()
}

/// Negotiates one item with the rule policy.
pub fn run_item(
    s: &Scenario,
    item: &ConstraintItem,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<(ItemOutcome, Vec<TranscriptEvent>)> {
    run_item_with(&RulePolicy, s, item, cfg, seed)
}

/// Negotiates one item, delegating every agent turn to `policy`.
pub fn run_item_with(
    policy: &dyn TurnPolicy,
    s: &Scenario,
    item: &ConstraintItem,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<(ItemOutcome, Vec<TranscriptEvent>)> {
    cfg.validate()?;
    if s.item(&item.key).is_none() {
        return Err(Error::UnknownItem(item.key.clone()));
    }
    let prefs = collect_prefs(s, item)?;
    if prefs.is_empty() {
        return Err(Error::EmptyInput("scenario has no personas"));
    }
    for (_, p) in &prefs {
        item.require(&p.value)?;
    }

    let mut rng = rng_from_seed(seed);
    let mut rec = Recorder {
        scenario_id: &s.id,
        item_key: &item.key,
        events: Vec::new(),
    };
    let mode = cfg.mode;
    let n = prefs.len();
    let tone_for = |w: WillingnessScore, rng: &mut crate::rng::SimRng| encode_tone(w, mode.tone_on(), cfg.tone_noise_eps, rng);

    let proposer_idx = rng.gen_range(0..n);

    let mut proposals = Vec::with_capacity(n);
    for (i, (persona, own)) in prefs.iter().enumerate() {
        let tone = tone_for(own.w, &mut rng);
        let ctx = TurnContext {
            scenario: s,
            item,
            agent: persona,
            own,
            round: 0,
            current_value: &own.value,
            mode,
            tone,
            history: &rec.events,
        };
        let mut turn = policy.propose(&ctx)?;
        if turn.record.value != own.value {
            return Err(Error::Contract(format!(
                "phase-1 proposal of `{}` must copy the private value `{}`",
                persona.id, own.value
            )));
        }
        turn.record.selected = i == proposer_idx;
        proposals.push(turn.record.clone());
        rec.push_turn(0, &persona.id, turn, EventPayload::Proposal);
    }

    let (proposer, proposer_pref) = prefs[proposer_idx];
    let mut current = proposals[proposer_idx].value.clone();
    let mut proposer_tone = proposals[proposer_idx].tone;
    let mut resolution = Resolution::Fallback;

    for round in 1..=cfg.max_rounds {
        if round > 1 {
            let last_votes: Vec<Vote> = rec
                .events
                .iter()
                .filter(|e| e.round == round - 1)
                .filter_map(|e| match &e.payload {
                    EventPayload::Vote(v) => Some(v.clone()),
                    _ => None,
                })
                .collect();
            let tone = tone_for(proposer_pref.w, &mut rng);
            let ctx = TurnContext {
                scenario: s,
                item,
                agent: proposer,
                own: proposer_pref,
                round,
                current_value: &current,
                mode,
                tone,
                history: &rec.events,
            };
            let turn = policy.update(&ctx, &last_votes)?;
            turn.record.check(item, &current)?;
            current = turn.record.new_value.clone();
            proposer_tone = turn.record.tone;
            rec.push_turn(round, &proposer.id, turn, EventPayload::ProposerAction);
        }

        let mut votes = Vec::with_capacity(n - 1);
        for (i, (persona, own)) in prefs.iter().enumerate() {
            if i == proposer_idx {
                continue;
            }
            let tone = tone_for(own.w, &mut rng);
            let appraisal = if mode.appraisal_on() {
                let ctx = TurnContext {
                    scenario: s,
                    item,
                    agent: persona,
                    own,
                    round,
                    current_value: &current,
                    mode,
                    tone,
                    history: &rec.events,
                };
                let turn = policy.appraise(&ctx, proposer_tone)?;
                let a = turn.record.clone();
                rec.push_turn(round, &persona.id, turn, EventPayload::Appraisal);
                Some(a)
            } else {
                None
            };
            let ctx = TurnContext {
                scenario: s,
                item,
                agent: persona,
                own,
                round,
                current_value: &current,
                mode,
                tone,
                history: &rec.events,
            };
            let turn = policy.vote(&ctx, appraisal.as_ref())?;
            turn.record.check(item)?;
            votes.push(turn.record.clone());
            rec.push_turn(round, &persona.id, turn, EventPayload::Vote);
        }

        if check_consensus(&votes, n, cfg.consensus_threshold) {
            resolution = Resolution::DebateRound { round };
            break;
        }
    }

    let final_value = match resolution {
        Resolution::DebateRound { .. } => current,
        Resolution::Fallback => {
            let ids: Vec<(&str, &Preference)> = prefs.iter().map(|(p, pref)| (p.id.as_str(), *pref)).collect();
            fallback(&ids)?.to_string()
        }
    };
    let last_round = match resolution {
        Resolution::DebateRound { round } => round,
        Resolution::Fallback => cfg.max_rounds,
    };
    rec.push(
        last_round,
        &proposer.id,
        EventPayload::Resolution(ResolutionRecord {
            final_value: final_value.clone(),
            resolution,
        }),
    );
    let outcome = build_outcome(s, item, &prefs, final_value, resolution, true, Some(proposer.id.clone()));
    Ok((outcome, rec.events))
}

/// Seed for one item, independent of the other items in the scenario.
pub fn item_seed(run_seed: u64, scenario_id: &str, item_key: &str) -> u64 {
    derive_seed(run_seed, &format!("{scenario_id}\u{1f}{item_key}"))
}

pub fn run_scenario(s: &Scenario, cfg: &PolicyConfig, seed: u64) -> Result<(Vec<ItemOutcome>, Vec<TranscriptEvent>)> {
    run_scenario_with(&RulePolicy, s, cfg, seed)
}

/// Settles hard items directly and negotiates every soft item in order.
pub fn run_scenario_with(
    policy: &dyn TurnPolicy,
    s: &Scenario,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<(Vec<ItemOutcome>, Vec<TranscriptEvent>)> {
    let mut outcomes = Vec::with_capacity(s.items.len());
    let mut transcript = Vec::new();
    for item in &s.items {
        if item.hard {
            let prefs = collect_prefs(s, item)?;
            let value = prefs[0].1.value.clone();
            let actor = prefs[0].0.id.clone();
            transcript.push(TranscriptEvent {
                scenario_id: s.id.clone(),
                item_key: item.key.clone(),
                seq: 0,
                round: 1,
                actor,
                hidden: false,
                payload: EventPayload::Resolution(ResolutionRecord {
                    final_value: value.clone(),
                    resolution: Resolution::DebateRound { round: 1 },
                }),
            });
            outcomes.push(build_outcome(s, item, &prefs, value, Resolution::DebateRound { round: 1 }, false, None));
            continue;
        }
        let (outcome, events) = run_item_with(policy, s, item, cfg, item_seed(seed, &s.id, &item.key))?;
        outcomes.push(outcome);
        transcript.extend(events);
    }
    Ok((outcomes, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::*;
    use crate::domain::{validate_scenario, DomainKind};
    use crate::policy::VoteChoice;

    fn agree() -> Vote {
        Vote::agree("", ToneBand::Neutral)
    }
    fn disagree() -> Vote {
        Vote::disagree("x", "", ToneBand::Neutral)
    }

    #[test]
    fn consensus_examples() {
        assert!(check_consensus(&[agree(), agree()], 3, 0.75));
        assert!(!check_consensus(&[agree(), disagree()], 3, 0.75));
        for n in 2..=4 {
            let votes = vec![disagree(); n - 1];
            assert!(!check_consensus(&votes, n, 0.75));
        }
        assert!(check_consensus(&[], 1, 0.75));
        // 2 of 2 passes a strict majority; 1 of 2 only passes tau <= 0.5
        assert!(!check_consensus(&[disagree()], 2, 0.75));
        assert!(check_consensus(&[disagree()], 2, 0.5));
    }

    #[test]
    fn fallback_examples() {
        let x7 = Preference::new("i__k", "X", 7);
        let y9 = Preference::new("i__k", "Y", 9);
        let x9 = Preference::new("i__k", "X", 9);
        assert_eq!(fallback(&[("A", &x7), ("B", &y9)]).unwrap(), "Y");
        assert_eq!(fallback(&[("A", &x9), ("B", &y9)]).unwrap(), "X");
        assert_eq!(fallback(&[("A", &x7)]).unwrap(), "X");
        assert!(fallback(&[]).is_err());
    }

    #[test]
    fn unanimous_item_closes_in_round_one() {
        let item = ConstraintItem::new("a__b", DomainKind::Categorical, &["p", "q"], false);
        let s = scenario(
            vec![persona("A", &[("a__b", "p", 3)]), persona("B", &[("a__b", "p", 9)]), persona("C", &[("a__b", "p", 5)])],
            vec![item.clone()],
        );
        for mode in [Mode::Base, Mode::Mind, Mode::ToneOnly, Mode::AppraisalOnly] {
            let (out, events) = run_item(&s, &item, &PolicyConfig::with_mode(mode), 11).unwrap();
            assert_eq!(out.resolution, Resolution::DebateRound { round: 1 });
            assert_eq!(out.final_value, "p");
            assert!(out.agents.iter().all(|a| a.matched));
            assert_eq!(out.top_agents, vec!["B"]);
            assert!(matches!(events.last().unwrap().payload, EventPayload::Resolution(_)));
        }
    }

    #[test]
    fn missing_preference_is_incomplete() {
        let item = ConstraintItem::new("a__b", DomainKind::Categorical, &["p", "q"], false);
        let s = scenario(vec![persona("A", &[("a__b", "p", 3)]), persona("B", &[])], vec![item.clone()]);
        assert!(matches!(run_item(&s, &item, &PolicyConfig::default(), 0), Err(Error::IncompleteScenario { .. })));
    }

    #[test]
    fn events_are_ordered_and_appraisals_hidden() {
        let s = compliant_trio();
        for mode in [Mode::Base, Mode::Mind, Mode::ToneOnly, Mode::AppraisalOnly] {
            let (_, events) = run_scenario(&s, &PolicyConfig::with_mode(mode), 5).unwrap();
            for e in &events {
                assert_eq!(e.hidden, matches!(e.payload, EventPayload::Appraisal(_) | EventPayload::Degradation(_)));
                assert!(e.round <= 3);
            }
            let has_appraisal = events.iter().any(|e| matches!(e.payload, EventPayload::Appraisal(_)));
            assert_eq!(has_appraisal, mode.appraisal_on());
            for item in &s.items {
                let seqs: Vec<u32> = events.iter().filter(|e| e.item_key == item.key).map(|e| e.seq).collect();
                assert!(seqs.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn visible_events_carry_no_willingness() {
        let s = compliant_trio();
        let (_, events) = run_scenario(&s, &PolicyConfig::default(), 5).unwrap();
        for e in events.iter().filter(|e| !e.hidden) {
            let v = serde_json::to_value(&e.payload).unwrap();
            let text = v.to_string();
            assert!(!text.contains("\"w\"") && !text.contains("willingness") && !text.contains("guessed"));
            // rationales carry the tone label, never a score
            let rationale = v["payload"].get("rationale").and_then(|r| r.as_str()).unwrap_or("");
            for score in 1..=10 {
                let mut stripped = rationale.to_string();
                for val in s.items.iter().flat_map(|i| &i.allowed_values) {
                    stripped = stripped.replace(val.as_str(), "");
                }
                assert!(!stripped.contains(&score.to_string()), "rationale leaks number: {rationale}");
            }
        }
    }

    #[test]
    fn proposer_is_fixed_and_values_allowed() {
        let s = compliant_trio();
        for seed in 0..40 {
            for mode in [Mode::Base, Mode::Mind, Mode::ToneOnly, Mode::AppraisalOnly] {
                let cfg = PolicyConfig { mode, tone_noise_eps: 0.3, ..PolicyConfig::default() };
                let (outs, events) = run_scenario(&s, &cfg, seed).unwrap();
                for out in outs.iter().filter(|o| o.negotiated) {
                    let item = s.item(&out.item_key).unwrap();
                    assert!(item.allows(&out.final_value));
                    let proposer = out.proposer.as_deref().unwrap();
                    for e in events.iter().filter(|e| e.item_key == out.item_key) {
                        if let EventPayload::ProposerAction(_) = e.payload {
                            assert_eq!(e.actor, proposer);
                        }
                        if let EventPayload::Vote(v) = &e.payload {
                            assert_ne!(e.actor, proposer);
                            if v.vote == VoteChoice::Disagree {
                                assert!(item.allows(v.revised_value.as_deref().unwrap()));
                            }
                        }
                    }
                    let any_consensus = matches!(out.resolution, Resolution::DebateRound { .. });
                    let fell_back = out.resolution == Resolution::Fallback;
                    assert_ne!(any_consensus, fell_back);
                }
            }
        }
    }

    #[test]
    fn hard_items_bypass_negotiation() {
        let s = compliant_trio();
        assert!(validate_scenario(&s).is_valid());
        let (outs, events) = run_scenario(&s, &PolicyConfig::default(), 1).unwrap();
        let hard: Vec<&ItemOutcome> = outs.iter().filter(|o| !o.negotiated).collect();
        assert_eq!(hard.len(), 2);
        for o in hard {
            assert_eq!(o.resolution, Resolution::DebateRound { round: 1 });
            assert!(o.agents.iter().all(|a| a.matched));
            assert_eq!(events.iter().filter(|e| e.item_key == o.item_key).count(), 1);
        }
    }

    #[test]
    fn replay_is_byte_identical() {
        let s = compliant_trio();
        let cfg = PolicyConfig { tone_noise_eps: 0.5, ..PolicyConfig::default() };
        let a = run_scenario(&s, &cfg, 77).unwrap();
        let b = run_scenario(&s, &cfg, 77).unwrap();
        assert_eq!(transcript_to_jsonl(&a.1).unwrap(), transcript_to_jsonl(&b.1).unwrap());
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn item_seeds_do_not_depend_on_other_items() {
        let s = compliant_trio();
        let cfg = PolicyConfig::default();
        let (_, full) = run_scenario(&s, &cfg, 9).unwrap();
        let mut fewer = s.clone();
        fewer.items.retain(|i| i.key != "restaurant__ambiance");
        for p in &mut fewer.personas {
            p.preferences.retain(|x| x.item_key != "restaurant__ambiance");
        }
        let (_, part) = run_scenario(&fewer, &cfg, 9).unwrap();
        let pick = |ev: &[TranscriptEvent]| -> Vec<TranscriptEvent> {
            ev.iter().filter(|e| e.item_key == "restaurant__rating").cloned().collect()
        };
        assert_eq!(pick(&full), pick(&part));
    }

    #[test]
    fn jsonl_round_trip() {
        let s = compliant_trio();
        let (_, events) = run_scenario(&s, &PolicyConfig::default(), 3).unwrap();
        let text = transcript_to_jsonl(&events).unwrap();
        assert!(text.lines().all(|l| l.starts_with("{\"schema\":\"mind-transcript/1\"")));
        assert_eq!(transcript_from_jsonl(&text).unwrap(), events);
    }
}
