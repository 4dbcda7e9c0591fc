//! Pairwise plan judging with position swap.
//!
//! The judge sees both plans twice, once in each slot. A criterion is won
//! only when both orderings name the same plan; otherwise it is a tie.

use serde::{Deserialize, Serialize};

use mind_core::protocol::{ItemOutcome, TranscriptEvent};

use crate::agent::conversation_lines;
use crate::client::{ChatMessage, ChatRequest, ChatTransport, LlmConfig};
use crate::error::LlmError;
use crate::parse::{parse_judge, JudgeReply, Pick};
use crate::prompts::{render, Bindings, Template};

pub const CRITERIA: [&str; 5] = [
    "Negotiation Rationality",
    "Preference Alignment",
    "Reason-Value Validity",
    "Opinion Change Justification",
    "Fluency & Naturalness",
];

/// What the judge is shown of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgePlan {
    pub version: String,
    pub constraints: String,
    pub conversation: String,
}

impl JudgePlan {
    /// Final constraints as `key: value` lines and the visible conversation.
    pub fn from_run(version: impl Into<String>, outcomes: &[ItemOutcome], transcript: &[TranscriptEvent]) -> Self {
        let constraints = outcomes
            .iter()
            .map(|o| format!("{}: {}", o.item_key, o.final_value))
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            version: version.into(),
            constraints,
            conversation: conversation_lines(transcript).join("\n"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: String,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub criteria: Vec<CriterionVerdict>,
    pub overall: Winner,
    /// Raw picks with A in the first slot, then with the slots swapped.
    pub forward: JudgeReply,
    pub swapped: JudgeReply,
}

pub fn render_judge(first: &JudgePlan, second: &JudgePlan) -> Result<Vec<ChatMessage>, LlmError> {
    let mut b = Bindings::new();
    b.insert("version_a", first.version.clone());
    b.insert("constraints_a", first.constraints.clone());
    b.insert("conversation_a", first.conversation.clone());
    b.insert("version_b", second.version.clone());
    b.insert("constraints_b", second.constraints.clone());
    b.insert("conversation_b", second.conversation.clone());
    Ok(vec![
        ChatMessage::system(Template::JudgeSystem.text()),
        ChatMessage::user(render(Template::JudgeUser.text(), &b)?),
    ])
}

fn combine(forward: Pick, swapped: Pick) -> Winner {
    // In the swapped run slot A holds plan B.
    match (forward, swapped) {
        (Pick::A, Pick::B) => Winner::A,
        (Pick::B, Pick::A) => Winner::B,
        _ => Winner::Tie,
    }
}

/// Judges plan `a` against plan `b` in both slot orders.
pub fn judge_pair<T: ChatTransport + ?Sized>(
    transport: &T,
    cfg: &LlmConfig,
    a: &JudgePlan,
    b: &JudgePlan,
) -> Result<PairVerdict, LlmError> {
    let ask = |first: &JudgePlan, second: &JudgePlan| -> Result<JudgeReply, LlmError> {
        let req = ChatRequest {
            model: cfg.judge_model.clone(),
            temperature: cfg.temperature,
            max_tokens: cfg.appraisal_max_tokens,
            messages: render_judge(first, second)?,
        };
        Ok(parse_judge(&transport.complete(&req)?)?)
    };
    let forward = ask(a, b)?;
    let swapped = ask(b, a)?;
    let criteria = CRITERIA
        .iter()
        .zip(forward.criteria.iter().zip(swapped.criteria.iter()))
        .map(|(name, (f, s))| CriterionVerdict {
            criterion: name.to_string(),
            winner: combine(*f, *s),
        })
        .collect();
    Ok(PairVerdict {
        criteria,
        overall: combine(forward.overall, swapped.overall),
        forward,
        swapped,
    })
}
