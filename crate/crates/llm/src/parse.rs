//! Strict parsing of model replies, one reply contract per phase.
//!
//! Values are compared to the allowed list byte for byte; a near miss is
//! reported, never repaired.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use mind_core::domain::{ConstraintItem, WillingnessScore};
use mind_core::policy::{ActionKind, Strategy, VoteChoice};

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    P1Proposal,
    P2aAppraisal,
    P2bVote,
    P3Action,
    Judge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalReply {
    pub value: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppraisalReply {
    pub guessed_opponent_w: WillingnessScore,
    pub strategy: Strategy,
    /// Only present when the model volunteers it.
    pub room_for_compromise: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteReply {
    pub vote: VoteChoice,
    pub revised_value: Option<String>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionReply {
    /// Absent in the baseline tag contract.
    pub action: Option<ActionKind>,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pick {
    A,
    B,
}

/// Per-criterion picks in criterion order, then the overall pick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeReply {
    pub criteria: [Pick; 5],
    pub overall: Pick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    Proposal(ProposalReply),
    Appraisal(AppraisalReply),
    Vote(VoteReply),
    Action(ActionReply),
    Judge(JudgeReply),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub phase: Phase,
    pub payload: Payload,
    pub raw: String,
}

/// Parses `raw` under the contract of `phase`. `item` supplies the target key
/// and allowed values; the judge phase ignores it.
pub fn parse_response(phase: Phase, raw: &str, item: &ConstraintItem) -> Result<ParsedResponse, ParseError> {
    let payload = match phase {
        Phase::P1Proposal => Payload::Proposal(parse_proposal(raw, item)?),
        Phase::P2aAppraisal => Payload::Appraisal(parse_appraisal(raw)?),
        Phase::P2bVote => Payload::Vote(parse_vote(raw, item)?),
        Phase::P3Action => Payload::Action(parse_action(raw, item)?),
        Phase::Judge => Payload::Judge(parse_judge(raw)?),
    };
    Ok(ParsedResponse {
        phase,
        payload,
        raw: raw.to_string(),
    })
}

/// The JSON object in a reply: code fences are dropped and the span from the
/// first `{` to the last `}` is decoded.
pub fn extract_json(raw: &str) -> Result<Map<String, Value>, ParseError> {
    let start = raw.find('{').ok_or_else(|| ParseError::MalformedJson("no JSON object".into()))?;
    let end = raw.rfind('}').filter(|&e| e > start).ok_or_else(|| ParseError::MalformedJson("unterminated object".into()))?;
    match serde_json::from_str::<Value>(&raw[start..=end]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ParseError::MalformedJson("not an object".into())),
        Err(e) => Err(ParseError::MalformedJson(e.to_string())),
    }
}

fn exact(value: &str, item: &ConstraintItem) -> Result<String, ParseError> {
    if item.allows(value) {
        Ok(value.to_string())
    } else {
        Err(ParseError::ValueMismatch {
            value: value.to_string(),
            allowed: item.allowed_values.clone(),
        })
    }
}

fn text_field(obj: &Map<String, Value>, names: &[&str]) -> Result<String, ParseError> {
    for name in names {
        match obj.get(*name) {
            Some(Value::String(s)) => return Ok(s.clone()),
            Some(other) => {
                return Err(ParseError::BadField {
                    field: name.to_string(),
                    got: other.to_string(),
                })
            }
            None => {}
        }
    }
    Err(ParseError::MissingField(names[0].to_string()))
}

pub fn parse_proposal(raw: &str, item: &ConstraintItem) -> Result<ProposalReply, ParseError> {
    let obj = extract_json(raw)?;
    let proposals = match obj.get("proposals") {
        Some(Value::Object(m)) => m,
        Some(other) => {
            return Err(ParseError::BadField {
                field: "proposals".into(),
                got: other.to_string(),
            })
        }
        None => return Err(ParseError::MissingField("proposals".into())),
    };
    let value = match proposals.get(&item.key) {
        Some(Value::String(s)) => exact(s, item)?,
        Some(other) => {
            return Err(ParseError::BadField {
                field: format!("proposals.{}", item.key),
                got: other.to_string(),
            })
        }
        None => return Err(ParseError::MissingField(format!("proposals.{}", item.key))),
    };
    Ok(ProposalReply {
        value,
        rationale: text_field(&obj, &["rationale"])?,
    })
}

pub fn parse_appraisal(raw: &str) -> Result<AppraisalReply, ParseError> {
    let obj = extract_json(raw)?;
    let inner = match obj.get("appraisal") {
        Some(Value::Object(m)) => m,
        Some(other) => {
            return Err(ParseError::BadField {
                field: "appraisal".into(),
                got: other.to_string(),
            })
        }
        None => return Err(ParseError::MissingField("appraisal".into())),
    };
    let alpha = inner
        .get("guessed_opponent_alpha")
        .ok_or_else(|| ParseError::MissingField("guessed_opponent_alpha".into()))?;
    let guessed = alpha
        .as_i64()
        .and_then(|a| WillingnessScore::new(a).ok())
        .ok_or_else(|| ParseError::BadField {
            field: "guessed_opponent_alpha".into(),
            got: alpha.to_string(),
        })?;
    let intent = text_field(inner, &["strategy_intent"])?;
    let strategy = Strategy::parse(&intent).ok_or_else(|| ParseError::BadField {
        field: "strategy_intent".into(),
        got: intent.clone(),
    })?;
    let room = match inner.get("opponent_room_for_compromise").or_else(|| inner.get("room_for_compromise")) {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(other) => {
            return Err(ParseError::BadField {
                field: "room_for_compromise".into(),
                got: other.to_string(),
            })
        }
    };
    Ok(AppraisalReply {
        guessed_opponent_w: guessed,
        strategy,
        room_for_compromise: room,
    })
}

pub fn parse_vote(raw: &str, item: &ConstraintItem) -> Result<VoteReply, ParseError> {
    let obj = extract_json(raw)?;
    let word = text_field(&obj, &["vote"])?;
    let vote = match word.trim().to_ascii_uppercase().as_str() {
        "AGREE" => VoteChoice::Agree,
        "DISAGREE" => VoteChoice::Disagree,
        _ => {
            return Err(ParseError::BadField {
                field: "vote".into(),
                got: word,
            })
        }
    };
    let revised = match obj.get("revised_value") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => {
            return Err(ParseError::BadField {
                field: "revised_value".into(),
                got: other.to_string(),
            })
        }
    };
    let revised_value = match (vote, revised) {
        (VoteChoice::Agree, None) => None,
        (VoteChoice::Agree, Some(v)) => return Err(ParseError::Contract(format!("AGREE must set revised_value to null, got `{v}`"))),
        (VoteChoice::Disagree, None) => return Err(ParseError::MissingField("revised_value".into())),
        (VoteChoice::Disagree, Some(v)) => Some(exact(&v, item)?),
    };
    Ok(VoteReply {
        vote,
        revised_value,
        rationale: text_field(&obj, &["rationale", "message"])?,
    })
}

/// Contents of the first `[NAME: ...]` tag; nested brackets are kept.
fn tag<'a>(raw: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("[{name}:");
    let start = raw.find(&open)? + open.len();
    let mut depth = 1;
    for (i, c) in raw[start..].char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(raw[start..start + i].trim());
                }
            }
            '\n' => return None,
            _ => {}
        }
    }
    None
}

pub fn parse_action(raw: &str, item: &ConstraintItem) -> Result<ActionReply, ParseError> {
    let action = match tag(raw, "ACTION") {
        None => None,
        Some(a) => Some(ActionKind::parse(a).ok_or_else(|| ParseError::BadField {
            field: "ACTION".into(),
            got: a.to_string(),
        })?),
    };
    let value = tag(raw, "REVISED_VALUE").ok_or(ParseError::MissingTag("REVISED_VALUE"))?;
    let reason = tag(raw, "PROPOSER_REASON").ok_or(ParseError::MissingTag("PROPOSER_REASON"))?;
    Ok(ActionReply {
        action,
        value: exact(value, item)?,
        reason: reason.to_string(),
    })
}

fn pick(s: &str) -> Option<Pick> {
    match s.trim().trim_start_matches("Plan ").trim() {
        "A" => Some(Pick::A),
        "B" => Some(Pick::B),
        _ => None,
    }
}

fn majority(picks: &[Pick; 5]) -> Pick {
    if picks.iter().filter(|p| **p == Pick::A).count() >= 3 {
        Pick::A
    } else {
        Pick::B
    }
}

fn judge_from_picks(picks: Vec<Pick>, raw: &str) -> Result<JudgeReply, ParseError> {
    match picks.len() {
        5 | 6 => {
            let criteria: [Pick; 5] = picks[..5].try_into().expect("five picks");
            let overall = picks.get(5).copied().unwrap_or_else(|| majority(&criteria));
            Ok(JudgeReply { criteria, overall })
        }
        n => Err(ParseError::Contract(format!(
            "expected 5 or 6 verdicts, found {n} in `{}`",
            raw.chars().take(80).collect::<String>()
        ))),
    }
}

/// Accepts a JSON object keyed by criterion (plus an optional overall key) or
/// a plain sequence of A/B tokens. Five tokens take the majority as overall;
/// a sixth token is the overall pick.
pub fn parse_judge(raw: &str) -> Result<JudgeReply, ParseError> {
    if let Ok(obj) = extract_json(raw) {
        let mut picks = Vec::new();
        for name in crate::judge::CRITERIA {
            let v = obj
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, v)| v)
                .ok_or_else(|| ParseError::MissingField(name.to_string()))?;
            picks.push(v.as_str().and_then(pick).ok_or_else(|| ParseError::BadField {
                field: name.to_string(),
                got: v.to_string(),
            })?);
        }
        if let Some((k, v)) = obj
            .iter()
            .find(|(k, _)| ["overall", "overall winner", "winner"].iter().any(|n| k.eq_ignore_ascii_case(n)))
        {
            picks.push(v.as_str().and_then(pick).ok_or_else(|| ParseError::BadField {
                field: k.clone(),
                got: v.to_string(),
            })?);
        }
        return judge_from_picks(picks, raw);
    }
    let picks = raw
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter_map(|t| match t {
            "A" => Some(Pick::A),
            "B" => Some(Pick::B),
            _ => None,
        })
        .collect();
    judge_from_picks(picks, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mind_core::domain::DomainKind;

    fn ambiance() -> ConstraintItem {
        ConstraintItem::new(
            "restaurant__ambiance",
            DomainKind::Categorical,
            &["Casual", "Fine dining", "No preference"],
            false,
        )
    }

    fn departure() -> ConstraintItem {
        ConstraintItem::new(
            "trip__departure",
            DomainKind::Categorical,
            &["Morning (06:00 - 12:00)", "Afternoon (12:00 - 18:00)"],
            true,
        )
    }

    #[test]
    fn agree_vote() {
        let r = parse_response(Phase::P2bVote, r#"{"vote":"AGREE","revised_value":null,"rationale":"ok"}"#, &ambiance()).unwrap();
        assert_eq!(
            r.payload,
            Payload::Vote(VoteReply {
                vote: VoteChoice::Agree,
                revised_value: None,
                rationale: "ok".into()
            })
        );
    }

    #[test]
    fn fenced_disagree_vote_with_message() {
        let raw = "```json\n{\"vote\": \"DISAGREE\", \"revised_value\": \"Casual\", \"message\": \"Relaxed is better.\"}\n```";
        let v = parse_vote(raw, &ambiance()).unwrap();
        assert_eq!(v.revised_value.as_deref(), Some("Casual"));
        assert_eq!(v.rationale, "Relaxed is better.");
    }

    #[test]
    fn vote_contract_violations() {
        let item = ambiance();
        assert!(matches!(
            parse_vote(r#"{"vote":"AGREE","revised_value":"Casual","rationale":"x"}"#, &item),
            Err(ParseError::Contract(_))
        ));
        assert_eq!(
            parse_vote(r#"{"vote":"DISAGREE","revised_value":null,"rationale":"x"}"#, &item),
            Err(ParseError::MissingField("revised_value".into()))
        );
        assert!(matches!(parse_vote(r#"{"vote":"MAYBE","rationale":"x"}"#, &item), Err(ParseError::BadField { .. })));
        assert!(matches!(parse_vote("I agree!", &item), Err(ParseError::MalformedJson(_))));
        assert!(matches!(parse_vote(r#"{"vote": "AGREE", }"#, &item), Err(ParseError::MalformedJson(_))));
    }

    #[test]
    fn near_miss_value_is_rejected() {
        let err = parse_vote(r#"{"vote":"DISAGREE","revised_value":"Morning","rationale":"x"}"#, &departure()).unwrap_err();
        assert!(matches!(err, ParseError::ValueMismatch { ref value, .. } if value == "Morning"));
        assert!(err.to_string().starts_with("value-mismatch: `Morning`"));
        let err = parse_action("[REVISED_VALUE: casual]\n[PROPOSER_REASON: fine]", &ambiance()).unwrap_err();
        assert!(matches!(err, ParseError::ValueMismatch { .. }));
    }

    #[test]
    fn tagged_action() {
        let raw = "[ACTION: UPDATE] [REVISED_VALUE: Casual] [PROPOSER_REASON: Both of you want a relaxed dinner, so let us go casual.]";
        let r = parse_response(Phase::P3Action, raw, &ambiance()).unwrap();
        let Payload::Action(a) = r.payload else { panic!("wrong payload") };
        assert_eq!(a.action, Some(ActionKind::Update));
        assert_eq!(a.value, "Casual");
        assert!(a.reason.starts_with("Both of you"));
    }

    #[test]
    fn tag_values_may_hold_brackets() {
        let raw = "[REVISED_VALUE: Morning (06:00 - 12:00)]\n[PROPOSER_REASON: Early start [really] helps.]";
        let a = parse_action(raw, &departure()).unwrap();
        assert_eq!(a.action, None);
        assert_eq!(a.value, "Morning (06:00 - 12:00)");
        assert_eq!(a.reason, "Early start [really] helps.");
        assert_eq!(parse_action("[PROPOSER_REASON: x]", &departure()), Err(ParseError::MissingTag("REVISED_VALUE")));
        assert!(matches!(parse_action("[ACTION: SHRUG]\n[REVISED_VALUE: Casual]", &ambiance()), Err(ParseError::BadField { .. })));
    }

    #[test]
    fn appraisal_reply() {
        let a = parse_appraisal(r#"{ "appraisal": { "guessed_opponent_alpha": 9, "strategy_intent": "yield" } }"#).unwrap();
        assert_eq!(a.guessed_opponent_w.get(), 9);
        assert_eq!(a.strategy, Strategy::Yield);
        assert_eq!(a.room_for_compromise, None);
        let a = parse_appraisal(
            r#"{"appraisal":{"guessed_opponent_alpha":3,"opponent_room_for_compromise":true,"strategy_intent":"Push"}}"#,
        )
        .unwrap();
        assert_eq!((a.strategy, a.room_for_compromise), (Strategy::Push, Some(true)));
        assert!(matches!(
            parse_appraisal(r#"{"appraisal":{"guessed_opponent_alpha":11,"strategy_intent":"yield"}}"#),
            Err(ParseError::BadField { .. })
        ));
        assert!(matches!(
            parse_appraisal(r#"{"appraisal":{"guessed_opponent_alpha":5,"strategy_intent":"yield/push"}}"#),
            Err(ParseError::BadField { .. })
        ));
        assert_eq!(parse_appraisal(r#"{"guessed_opponent_alpha":5}"#), Err(ParseError::MissingField("appraisal".into())));
    }

    #[test]
    fn proposal_reply() {
        let raw = r#"{"proposals": {"restaurant__ambiance": "Fine dining", "other__x": "y"}, "rationale": "We deserve one special evening."}"#;
        let p = parse_proposal(raw, &ambiance()).unwrap();
        assert_eq!(p.value, "Fine dining");
        assert_eq!(
            parse_proposal(r#"{"proposals": {}, "rationale": "r"}"#, &ambiance()),
            Err(ParseError::MissingField("proposals.restaurant__ambiance".into()))
        );
        assert_eq!(
            parse_proposal(r#"{"proposals": {"restaurant__ambiance": "Casual"}}"#, &ambiance()),
            Err(ParseError::MissingField("rationale".into()))
        );
    }

    #[test]
    fn judge_token_lists() {
        let r = parse_judge("A,A,B,A,B").unwrap();
        assert_eq!(r.criteria, [Pick::A, Pick::A, Pick::B, Pick::A, Pick::B]);
        assert_eq!(r.overall, Pick::A);
        let r = parse_judge("1. Negotiation Rationality: B\n2. Preference Alignment: B\n3. Reason-Value Validity: A\n4. Opinion Change Justification: A\n5. Fluency & Naturalness: A\nOverall: B").unwrap();
        assert_eq!(r.overall, Pick::B);
        assert!(parse_judge("A,B").is_err());
        assert!(parse_judge("no idea").is_err());
    }

    #[test]
    fn judge_json() {
        let raw = r#"{"Negotiation Rationality":"A","Preference Alignment":"Plan B","Reason-Value Validity":"A","Opinion Change Justification":"A","Fluency & Naturalness":"B","overall":"A"}"#;
        let r = parse_judge(raw).unwrap();
        assert_eq!(r.criteria[1], Pick::B);
        assert_eq!(r.overall, Pick::A);
        assert!(matches!(
            parse_judge(r#"{"Negotiation Rationality":"A"}"#),
            Err(ParseError::MissingField(_))
        ));
    }
}
