//! Five hand-built three-agent negotiations with their expected traces under
//! the rule policy in Mind mode.
//!
//! Each fixture is a single-item scenario; it is replayed with [`run_item`]
//! directly since it does not meet the forging filter. The seed is frozen so
//! that the seeded proposer draw lands on the agent named `Proposer`.
//!
//! [`run_item`]: crate::protocol::run_item

use serde::{Deserialize, Serialize};

use crate::domain::{ConstraintItem, DomainKind, Persona, Preference, Scenario};
use crate::policy::{ActionKind, Strategy, VoteChoice};
use crate::protocol::{EventPayload, Resolution, TranscriptEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceVote {
    pub voter: String,
    pub strategy: Option<Strategy>,
    pub vote: VoteChoice,
    pub revised_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRound {
    pub round: u32,
    /// Proposer move made at the start of the round; none in round 1.
    pub action: Option<(ActionKind, String)>,
    pub current_value: String,
    pub votes: Vec<TraceVote>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub proposer: String,
    pub rounds: Vec<TraceRound>,
    pub final_value: String,
    pub resolution: Resolution,
}

impl Trace {
    /// Condenses an item transcript into rounds, votes and proposer moves.
    pub fn from_events(events: &[TranscriptEvent]) -> Option<Trace> {
        let mut proposer = None;
        let mut initial = None;
        for e in events {
            if let EventPayload::Proposal(p) = &e.payload {
                if p.selected {
                    proposer = Some(e.actor.clone());
                    initial = Some(p.value.clone());
                }
            }
        }
        let mut current = initial?;
        let mut rounds: Vec<TraceRound> = Vec::new();
        let mut pending: Option<Strategy> = None;
        let mut end = None;
        for e in events.iter().filter(|e| e.round > 0) {
            if rounds.last().is_none_or(|r| r.round != e.round) {
                rounds.push(TraceRound {
                    round: e.round,
                    action: None,
                    current_value: current.clone(),
                    votes: Vec::new(),
                });
            }
            let r = rounds.last_mut().expect("pushed above");
            match &e.payload {
                EventPayload::ProposerAction(a) => {
                    current = a.new_value.clone();
                    r.current_value = current.clone();
                    r.action = Some((a.action, a.new_value.clone()));
                }
                EventPayload::Appraisal(a) => pending = Some(a.strategy),
                EventPayload::Vote(v) => r.votes.push(TraceVote {
                    voter: e.actor.clone(),
                    strategy: pending.take(),
                    vote: v.vote,
                    revised_value: v.revised_value.clone(),
                }),
                EventPayload::Resolution(res) => end = Some(res.clone()),
                EventPayload::Proposal(_) | EventPayload::Degradation(_) => {}
            }
        }
        let end = end?;
        Some(Trace {
            proposer: proposer?,
            rounds,
            final_value: end.final_value,
            resolution: end.resolution,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GoldenFixture {
    pub name: &'static str,
    pub scenario: Scenario,
    pub item: ConstraintItem,
    pub seed: u64,
    pub expected: Trace,
}

fn persona(id: &str, item: &str, value: &str, w: u8) -> Persona {
    Persona {
        id: id.into(),
        attributes: Default::default(),
        preferences: vec![Preference::new(item, value, w)],
    }
}

fn scenario(id: &str, item: &ConstraintItem, members: [(&str, &str, u8); 3]) -> Scenario {
    Scenario {
        id: id.into(),
        personas: members.iter().map(|(p, v, w)| persona(p, &item.key, v, *w)).collect(),
        items: vec![item.clone()],
        origin: "Seattle".into(),
        destination: "Denver".into(),
        days: 3,
        people_number: 3,
        budget_anchor: 1500.0,
    }
}

fn agree(voter: &str, strategy: Strategy) -> TraceVote {
    TraceVote {
        voter: voter.into(),
        strategy: Some(strategy),
        vote: VoteChoice::Agree,
        revised_value: None,
    }
}

fn disagree(voter: &str, strategy: Strategy, value: &str) -> TraceVote {
    TraceVote {
        voter: voter.into(),
        strategy: Some(strategy),
        vote: VoteChoice::Disagree,
        revised_value: Some(value.into()),
    }
}

fn round(n: u32, action: Option<(ActionKind, &str)>, current: &str, votes: Vec<TraceVote>) -> TraceRound {
    TraceRound {
        round: n,
        action: action.map(|(a, v)| (a, v.to_string())),
        current_value: current.into(),
        votes,
    }
}

const P: &str = "Proposer";
const A: &str = "Voter A";
const B: &str = "Voter B";

/// A strict proposer wins at once.
pub fn immediate_consensus() -> GoldenFixture {
    let item = ConstraintItem::new(
        "accommodation__house_rules",
        DomainKind::Categorical,
        &["Non-smoking", "Smoking allowed", "No preference"],
        false,
    );
    GoldenFixture {
        name: "immediate-consensus",
        scenario: scenario("immediate-consensus", &item, [(P, "Non-smoking", 10), (A, "Non-smoking", 10), (B, "No preference", 2)]),
        item,
        seed: 3,
        expected: Trace {
            proposer: P.into(),
            rounds: vec![round(
                1,
                None,
                "Non-smoking",
                vec![agree(A, Strategy::Accept), agree(B, Strategy::Yield)],
            )],
            final_value: "Non-smoking".into(),
            resolution: Resolution::DebateRound { round: 1 },
        },
    }
}

/// A low-stakes proposer adopts what both voters ask for.
pub fn strategic_update() -> GoldenFixture {
    let item = ConstraintItem::new(
        "restaurant__ambiance",
        DomainKind::Categorical,
        &["Casual", "Fine dining", "Street food", "No preference"],
        false,
    );
    GoldenFixture {
        name: "strategic-update",
        scenario: scenario("strategic-update", &item, [(P, "No preference", 2), (A, "Casual", 6), (B, "Casual", 6)]),
        item,
        seed: 3,
        expected: Trace {
            proposer: P.into(),
            rounds: vec![
                round(
                    1,
                    None,
                    "No preference",
                    vec![disagree(A, Strategy::Compromise, "Casual"), disagree(B, Strategy::Compromise, "Casual")],
                ),
                round(
                    2,
                    Some((ActionKind::Update, "Casual")),
                    "Casual",
                    vec![agree(A, Strategy::Accept), agree(B, Strategy::Accept)],
                ),
            ],
            final_value: "Casual".into(),
            resolution: Resolution::DebateRound { round: 2 },
        },
    }
}

/// Voters hold out on a middle value until the proposer comes down to it.
pub fn strategic_compromise() -> GoldenFixture {
    let item = ConstraintItem::new(
        "restaurant__rating",
        DomainKind::Ordinal,
        &["3.0+", "3.5+", "3.8+", "4.0+ (Reliable)"],
        false,
    );
    GoldenFixture {
        name: "strategic-compromise",
        scenario: scenario("strategic-compromise", &item, [(P, "4.0+ (Reliable)", 5), (A, "3.0+", 4), (B, "3.0+", 4)]),
        item,
        seed: 3,
        expected: Trace {
            proposer: P.into(),
            rounds: vec![
                round(
                    1,
                    None,
                    "4.0+ (Reliable)",
                    vec![disagree(A, Strategy::Compromise, "3.5+"), disagree(B, Strategy::Compromise, "3.5+")],
                ),
                round(
                    2,
                    Some((ActionKind::Compromise, "3.8+")),
                    "3.8+",
                    vec![disagree(A, Strategy::Compromise, "3.5+"), disagree(B, Strategy::Compromise, "3.5+")],
                ),
                round(
                    3,
                    Some((ActionKind::Update, "3.5+")),
                    "3.5+",
                    vec![agree(A, Strategy::Compromise), agree(B, Strategy::Compromise)],
                ),
            ],
            final_value: "3.5+".into(),
            resolution: Resolution::DebateRound { round: 3 },
        },
    }
}

/// A 2-vs-1 split that never reaches the threshold and falls back to the
/// most committed agent.
pub fn rational_deadlock() -> GoldenFixture {
    let item = ConstraintItem::new(
        "restaurant__price",
        DomainKind::Categorical,
        &["Budget", "Moderate", "Upscale"],
        false,
    );
    let split = || vec![disagree(A, Strategy::Compromise, "Budget"), agree(B, Strategy::Accept)];
    GoldenFixture {
        name: "rational-deadlock",
        scenario: scenario("rational-deadlock", &item, [(P, "Moderate", 7), (A, "Budget", 8), (B, "Moderate", 7)]),
        item,
        seed: 3,
        expected: Trace {
            proposer: P.into(),
            rounds: vec![
                round(1, None, "Moderate", split()),
                round(2, Some((ActionKind::Keep, "Moderate")), "Moderate", split()),
                round(3, Some((ActionKind::Keep, "Moderate")), "Moderate", split()),
            ],
            final_value: "Budget".into(),
            resolution: Resolution::Fallback,
        },
    }
}

/// One voter drops its objection in the second round once the proposer
/// holds firm.
pub fn opinion_shift() -> GoldenFixture {
    let item = ConstraintItem::new(
        "accommodation__review_score",
        DomainKind::Ordinal,
        &["3.0", "3.5", "4.0", "4.5"],
        false,
    );
    GoldenFixture {
        name: "opinion-shift",
        scenario: scenario("opinion-shift", &item, [(P, "4.0", 6), (A, "4.0", 6), (B, "3.5", 5)]),
        item,
        seed: 3,
        expected: Trace {
            proposer: P.into(),
            rounds: vec![
                round(
                    1,
                    None,
                    "4.0",
                    vec![agree(A, Strategy::Accept), disagree(B, Strategy::Compromise, "3.5")],
                ),
                round(
                    2,
                    Some((ActionKind::Keep, "4.0")),
                    "4.0",
                    vec![agree(A, Strategy::Accept), agree(B, Strategy::Compromise)],
                ),
            ],
            final_value: "4.0".into(),
            resolution: Resolution::DebateRound { round: 2 },
        },
    }
}

pub fn all() -> Vec<GoldenFixture> {
    vec![
        immediate_consensus(),
        strategic_update(),
        strategic_compromise(),
        rational_deadlock(),
        opinion_shift(),
    ]
}
