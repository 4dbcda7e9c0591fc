//! Agent turns answered by a chat model.
//!
//! Each turn renders its prompt, asks the model, and parses the reply. A
//! reply that breaks its contract is sent back once with the error attached;
//! a second failure hands the turn to the rule policy and marks it degraded.

use mind_core::domain::{band_of, ToneBand};
use mind_core::policy::{ActionKind, Appraisal, ProposerAction, Strategy, Vote, VoteChoice};
use mind_core::protocol::{Degradation, EventPayload, Proposal, RulePolicy, TranscriptEvent, Turn, TurnContext, TurnPolicy};

use crate::client::{ChatMessage, ChatRequest, ChatTransport, LlmConfig};
use crate::error::{LlmError, ParseError};
use crate::parse::{parse_action, parse_appraisal, parse_proposal, parse_vote};
use crate::prompts::{render, Bindings, Template};

/// The turn a prompt is rendered for.
#[derive(Debug, Clone, Copy)]
pub enum TurnKind<'a> {
    Propose,
    Appraise,
    /// `strategy` comes from this voter's appraisal when the mode appraises.
    Vote { strategy: Option<Strategy> },
    Update { votes: &'a [Vote] },
}

impl TurnKind<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            TurnKind::Propose => "proposal",
            TurnKind::Appraise => "appraisal",
            TurnKind::Vote { .. } => "vote",
            TurnKind::Update { .. } => "update",
        }
    }
}

fn money(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

/// Readable lines for the visible events of an item; hidden events are
/// skipped.
pub fn conversation_lines(events: &[TranscriptEvent]) -> Vec<String> {
    events
        .iter()
        .filter(|e| !e.hidden)
        .filter_map(|e| match &e.payload {
            EventPayload::Proposal(p) => Some(format!(
                "[Phase 1] {} proposed \"{}\"{}: {}",
                e.actor,
                p.value,
                if p.selected { " (selected as the current proposal)" } else { "" },
                p.rationale
            )),
            EventPayload::Vote(v) => Some(match &v.revised_value {
                Some(r) => format!("[Round {}] {}: DISAGREE, suggests \"{}\". {}", e.round, e.actor, r, v.rationale),
                None => format!("[Round {}] {}: AGREE. {}", e.round, e.actor, v.rationale),
            }),
            EventPayload::ProposerAction(a) => Some(format!(
                "[Round {}] {} (proposer): {} \"{}\". {}",
                e.round,
                e.actor,
                a.action.label(),
                a.new_value,
                a.rationale
            )),
            EventPayload::Resolution(r) => Some(format!("[Result] {}: \"{}\"", e.item_key, r.final_value)),
            EventPayload::Appraisal(_) | EventPayload::Degradation(_) => None,
        })
        .collect()
}

fn history_text(ctx: &TurnContext<'_>) -> String {
    let lines = conversation_lines(ctx.history);
    if lines.is_empty() {
        "None".into()
    } else {
        lines.join("\n")
    }
}

/// Voter names and votes of the round before `ctx.round`.
fn last_round_votes<'a>(ctx: &TurnContext<'a>) -> Vec<(&'a str, &'a Vote)> {
    ctx.history
        .iter()
        .filter(|e| e.round + 1 == ctx.round)
        .filter_map(|e| match &e.payload {
            EventPayload::Vote(v) => Some((e.actor.as_str(), v)),
            _ => None,
        })
        .collect()
}

fn bindings(ctx: &TurnContext<'_>) -> Bindings {
    let s = ctx.scenario;
    let own_band = band_of(ctx.own.w);
    let mut constraint = format!("- {}: {}", ctx.item.key, ctx.own.value);
    if ctx.mode.tone_on() || ctx.mode.appraisal_on() {
        constraint.push_str(&format!(" [alpha band: {}]", own_band.label()));
    }
    let allowed = serde_json::to_string(&ctx.item.allowed_values).expect("strings serialize");
    let mut b = Bindings::new();
    b.insert("target_key", ctx.item.key.clone());
    b.insert("current_private_value", ctx.own.value.clone());
    b.insert("current_value", ctx.current_value.to_string());
    b.insert("current_round", ctx.round.to_string());
    b.insert("allowed_values", allowed);
    b.insert("budget_anchor", money(s.budget_anchor));
    b.insert("people_number", s.people_number.to_string());
    b.insert("org", s.origin.clone());
    b.insert("dest", s.destination.clone());
    b.insert("days", s.days.to_string());
    b.insert("filtered_constraints", constraint);
    b.insert("discussion_history", history_text(ctx));
    // The system prompt carries the expressed tone; the appraisal phases
    // reason over the agent's own band.
    b.insert("alpha_band", own_band.label().to_string());
    b
}

/// Messages for one agent turn: system prompt, discussion context where the
/// phase prompt has no slot for it, then the phase prompt.
pub fn render_turn(kind: TurnKind<'_>, ctx: &TurnContext<'_>) -> Result<Vec<ChatMessage>, LlmError> {
    let mut b = bindings(ctx);
    let mode = ctx.mode;
    let system = if mode.tone_on() {
        let mut sb = b.clone();
        sb.insert("alpha_band", ctx.tone.label().to_string());
        render(Template::MindSystem.text(), &sb)?
    } else {
        render(Template::BaseSystem.text(), &b)?
    };
    let mut messages = vec![ChatMessage::system(system)];
    let context_message = |ctx: &TurnContext<'_>| {
        ChatMessage::user(format!(
            "### DISCUSSION SO FAR (Round {})\nCurrent Proposed Value: {}\n{}",
            ctx.round,
            ctx.current_value,
            history_text(ctx)
        ))
    };
    let prompt = match kind {
        TurnKind::Propose => {
            let t = if mode.tone_on() { Template::MindProposal } else { Template::BaseProposal };
            render(t.text(), &b)?
        }
        TurnKind::Appraise => {
            messages.push(context_message(ctx));
            render(Template::MindAppraisal.text(), &b)?
        }
        TurnKind::Vote { strategy: Some(st) } if mode.appraisal_on() => {
            messages.push(context_message(ctx));
            b.insert("strategy_intent", st.label().to_string());
            render(Template::MindVote.text(), &b)?
        }
        TurnKind::Vote { .. } => render(Template::BaseVote.text(), &b)?,
        TurnKind::Update { votes } => {
            let dissent = votes.iter().filter(|v| !v.is_agree()).count();
            if mode.appraisal_on() {
                messages.push(context_message(ctx));
                b.insert("dissent_rate", format!("{dissent} out of {} agents disagree", votes.len()));
                render(Template::MindUpdate.text(), &b)?
            } else {
                let named = last_round_votes(ctx);
                let lines: Vec<String> = votes
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.vote == VoteChoice::Disagree)
                    .map(|(i, v)| {
                        let who = named.get(i).map(|(n, _)| n.to_string()).unwrap_or_else(|| format!("Voter {}", i + 1));
                        format!("- {who} suggests \"{}\": {}", v.revised_value.as_deref().unwrap_or(""), v.rationale)
                    })
                    .collect();
                b.insert(
                    "dissent_text",
                    format!("{} of {} voters disagree.\n{}", dissent, votes.len(), lines.join("\n")),
                );
                render(Template::BaseUpdate.text(), &b)?
            }
        }
    };
    messages.push(ChatMessage::user(prompt));
    Ok(messages)
}

/// [`TurnPolicy`] backed by a chat model, with the rule policy as the
/// per-turn fallback.
pub struct LlmPolicy<T> {
    transport: T,
    cfg: LlmConfig,
}

impl<T: ChatTransport> LlmPolicy<T> {
    pub fn new(transport: T, cfg: LlmConfig) -> Self {
        Self { transport, cfg }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn max_tokens(&self, kind: &TurnKind<'_>) -> u32 {
        match kind {
            TurnKind::Propose | TurnKind::Update { .. } => self.cfg.proposal_max_tokens,
            TurnKind::Appraise | TurnKind::Vote { .. } => self.cfg.appraisal_max_tokens,
        }
    }

    /// Asks up to twice. The outer error is a transport or rendering failure;
    /// the inner one is the last reply that broke the contract.
    fn ask<R>(
        &self,
        kind: TurnKind<'_>,
        ctx: &TurnContext<'_>,
        accept: impl Fn(&str) -> Result<R, ParseError>,
    ) -> mind_core::Result<Result<R, ParseError>> {
        let mut req = ChatRequest {
            model: self.cfg.model.clone(),
            temperature: self.cfg.temperature,
            max_tokens: self.max_tokens(&kind),
            messages: render_turn(kind, ctx)?,
        };
        let raw = self.transport.complete(&req).map_err(LlmError::from)?;
        let err = match accept(&raw) {
            Ok(r) => return Ok(Ok(r)),
            Err(e) => e,
        };
        req.messages.push(ChatMessage::assistant(raw));
        req.messages.push(ChatMessage::user(format!(
            "Your reply was rejected: {err}. Answer again and follow the output format exactly."
        )));
        let raw = self.transport.complete(&req).map_err(LlmError::from)?;
        Ok(accept(&raw))
    }
}

fn degrade<R>(fallback: mind_core::Result<Turn<R>>, kind: &TurnKind<'_>, err: ParseError) -> mind_core::Result<Turn<R>> {
    let mut turn = fallback?;
    turn.degraded = Some(Degradation {
        turn: kind.label().into(),
        reason: err.to_string(),
    });
    Ok(turn)
}

fn contract(e: mind_core::Error) -> ParseError {
    ParseError::Contract(e.to_string())
}

impl<T: ChatTransport> TurnPolicy for LlmPolicy<T> {
    fn propose(&self, ctx: &TurnContext<'_>) -> mind_core::Result<Turn<Proposal>> {
        let kind = TurnKind::Propose;
        let got = self.ask(kind, ctx, |raw| {
            let p = parse_proposal(raw, ctx.item)?;
            if p.value != ctx.own.value {
                return Err(ParseError::Contract(format!(
                    "phase-1 value `{}` must equal the private value `{}`",
                    p.value, ctx.own.value
                )));
            }
            Ok(p)
        })?;
        match got {
            Ok(p) => Ok(Turn::clean(Proposal {
                value: p.value,
                rationale: p.rationale,
                tone: ctx.tone,
                selected: false,
            })),
            Err(e) => degrade(RulePolicy.propose(ctx), &kind, e),
        }
    }

    fn appraise(&self, ctx: &TurnContext<'_>, proposer_tone: ToneBand) -> mind_core::Result<Turn<Appraisal>> {
        let kind = TurnKind::Appraise;
        match self.ask(kind, ctx, parse_appraisal)? {
            Ok(a) => Ok(Turn::clean(Appraisal {
                guessed_opponent_w: a.guessed_opponent_w,
                room_for_compromise: a.room_for_compromise.unwrap_or(proposer_tone != ToneBand::Strict),
                strategy: a.strategy,
            })),
            Err(e) => degrade(RulePolicy.appraise(ctx, proposer_tone), &kind, e),
        }
    }

    fn vote(&self, ctx: &TurnContext<'_>, appraisal: Option<&Appraisal>) -> mind_core::Result<Turn<Vote>> {
        let kind = TurnKind::Vote {
            strategy: appraisal.map(|a| a.strategy),
        };
        let got = self.ask(kind, ctx, |raw| {
            let v = parse_vote(raw, ctx.item)?;
            let vote = Vote {
                vote: v.vote,
                revised_value: v.revised_value,
                rationale: v.rationale,
                tone: ctx.tone,
            };
            vote.check(ctx.item).map_err(contract)?;
            Ok(vote)
        })?;
        match got {
            Ok(v) => Ok(Turn::clean(v)),
            Err(e) => degrade(RulePolicy.vote(ctx, appraisal), &kind, e),
        }
    }

    fn update(&self, ctx: &TurnContext<'_>, votes: &[Vote]) -> mind_core::Result<Turn<ProposerAction>> {
        let kind = TurnKind::Update { votes };
        let tagged = ctx.mode.appraisal_on();
        let got = self.ask(kind, ctx, |raw| {
            let a = parse_action(raw, ctx.item)?;
            let action = match a.action {
                Some(k) => k,
                None if tagged => return Err(ParseError::MissingTag("ACTION")),
                // The baseline contract names only the value; keeping it is
                // the only way to say KEEP.
                None if a.value == ctx.current_value => ActionKind::Keep,
                None => ActionKind::Update,
            };
            let act = ProposerAction {
                action,
                new_value: a.value,
                rationale: a.reason,
                tone: ctx.tone,
            };
            act.check(ctx.item, ctx.current_value).map_err(contract)?;
            Ok(act)
        })?;
        match got {
            Ok(a) => Ok(Turn::clean(a)),
            Err(e) => degrade(RulePolicy.update(ctx, votes), &kind, e),
        }
    }
}
